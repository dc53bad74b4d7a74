use proptest::prelude::*;

use voxface::geometry::camera::project_point;
use voxface::geometry::{voxelize, DepthRange, ProjectionParams, TriMesh, ViewFrame};

const N: usize = 16;
const I3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn frame() -> (ProjectionParams, ViewFrame) {
    (ProjectionParams::new(1.0, I3, [0.0, 0.0]).unwrap(), ViewFrame::new(N, DepthRange::new(N as f64, 0.0).unwrap()))
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [0.0..N as f64, 0.0..N as f64, 0.0..N as f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every point sampled on a triangle lies in an occupied voxel, and the grid
    /// stays binary.
    #[test]
    fn triangle_surface_is_covered(a in point(), b in point(), c in point()) {
        let (params, frame) = frame();
        let mesh = TriMesh::new(vec![a, b, c], vec![[0, 1, 2]]).unwrap();
        let grid = voxelize(&mesh, &params, &frame, N).unwrap();
        prop_assert!(grid.is_binary());
        for i in 0..=12 {
            for j in 0..=(12 - i) {
                let (u, v) = (i as f64 / 12.0, j as f64 / 12.0);
                let p: [f64; 3] = std::array::from_fn(|k| a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]));
                let q = project_point(p, &params);
                let cell = [q[0], q[1], frame.range.normalize(q[2]) * N as f64]
                    .map(|x| (x.floor().max(0.0) as usize).min(N - 1));
                // a point on a cell boundary may be credited to either neighbour
                let hit = (0..27).any(|o: usize| {
                    let d = [o % 3, (o / 3) % 3, o / 9];
                    let at: Vec<usize> = (0..3).map(|k| (cell[k] + d[k]).wrapping_sub(1)).collect();
                    at.iter().all(|&x| x < N)
                        && grid.get(at[0], at[1], at[2]) == 1.0
                        && (0..3).all(|k| {
                            let x = [q[0], q[1], frame.range.normalize(q[2]) * N as f64][k];
                            x >= at[k] as f64 - 1e-9 && x <= at[k] as f64 + 1.0 + 1e-9
                        })
                });
                prop_assert!(hit, "point {:?} not covered", p);
            }
        }
    }

    /// Voxelizing a mesh and the same mesh with its triangle list reversed
    /// gives the same grid.
    #[test]
    fn order_independent(a in point(), b in point(), c in point(), d in point()) {
        let (params, frame) = frame();
        let m1 = TriMesh::new(vec![a, b, c, d], vec![[0, 1, 2], [1, 2, 3]]).unwrap();
        let m2 = TriMesh::new(vec![a, b, c, d], vec![[1, 2, 3], [0, 1, 2]]).unwrap();
        prop_assert_eq!(voxelize(&m1, &params, &frame, N).unwrap(), voxelize(&m2, &params, &frame, N).unwrap());
    }
}
