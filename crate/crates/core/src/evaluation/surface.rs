use std::collections::HashMap;

use crate::geometry::{TriMesh, VoxelGrid};

/// Unit offsets of the six face neighbours, with each face's corners ordered
/// counter-clockwise seen from outside.
const FACES: [([i64; 3], [[usize; 3]; 4]); 6] = [
    ([-1, 0, 0], [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0]]),
    ([1, 0, 0], [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]]),
    ([0, -1, 0], [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]]),
    ([0, 1, 0], [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]]),
    ([0, 0, -1], [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]]),
    ([0, 0, 1], [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]),
];

/// Boundary faces of the voxels at or above `t`, two triangles per face not
/// shared with another such voxel, in voxel units. Also returns, per vertex,
/// the rank (in storage order) of the voxel that first emitted it.
pub fn extract_surface_indexed(grid: &VoxelGrid, t: f32) -> (TriMesh, Vec<usize>) {
    let n = grid.n as i64;
    let on = |x: i64, y: i64, z: i64| {
        (0..n).contains(&x) && (0..n).contains(&y) && (0..n).contains(&z) && grid.get(x as usize, y as usize, z as usize) >= t
    };
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut source = Vec::new();
    let mut triangles = Vec::new();
    let mut rank = 0;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                if !on(x, y, z) {
                    continue;
                }
                for (d, corners) in FACES {
                    if on(x + d[0], y + d[1], z + d[2]) {
                        continue;
                    }
                    let ids = corners.map(|c| {
                        let key = [x as usize + c[0], y as usize + c[1], z as usize + c[2]];
                        *index.entry(key).or_insert_with(|| {
                            vertices.push(key.map(|v| v as f64));
                            source.push(rank);
                            vertices.len() - 1
                        })
                    });
                    triangles.push([ids[0], ids[1], ids[2]]);
                    triangles.push([ids[0], ids[2], ids[3]]);
                }
                rank += 1;
            }
        }
    }
    (TriMesh { vertices, triangles }, source)
}

pub fn extract_surface(grid: &VoxelGrid, t: f32) -> TriMesh {
    extract_surface_indexed(grid, t).0
}
