//! Raw 2D convolution kernels over contiguous `C×H×W` buffers.
//!
//! Three primitives cover both convolution and transposed convolution and
//! their gradients:
//!
//! * [`correlate`]: `y[o,i,j] = Σ k[o,c,p,q] · x[c, i·s+p−pad, j·s+q−pad]`
//! * [`scatter`]: the adjoint of `correlate` with respect to `x`
//! * [`kernel_grad`]: the adjoint of `correlate` with respect to `k`
//!
//! All three lower to a single GEMM over an im2col buffer.

/// Extents of a `C×H×W` buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Dims {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }
}

/// Kernel footprint and sampling pattern shared by a convolution and its adjoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Window {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Window {
    /// Output extent of a correlation over an input extent, if the kernel fits.
    pub fn out_extent(&self, input: usize, kernel: usize) -> Option<usize> {
        let padded = input + 2 * self.pad;
        if kernel > padded || self.stride == 0 {
            return None;
        }
        Some((padded - kernel) / self.stride + 1)
    }

    /// Range of output indices `j` for which `j·s + q − pad` lands in `[0, input)`.
    fn valid_range(&self, q: usize, input: usize, out: usize) -> (usize, usize) {
        let s = self.stride as isize;
        let off = q as isize - self.pad as isize;
        // smallest j with j*s + off >= 0
        let lo = if off >= 0 { 0 } else { ((-off) + s - 1) / s };
        // largest j with j*s + off <= input - 1
        let hi_num = input as isize - 1 - off;
        let hi = if hi_num < 0 { -1 } else { hi_num / s };
        let lo = lo.max(0) as usize;
        let hi = (hi + 1).clamp(0, out as isize) as usize;
        (lo.min(hi), hi)
    }
}

fn im2col(x: &[f64], xd: Dims, win: Window, ho: usize, wo: usize) -> Vec<f64> {
    let cols = ho * wo;
    let mut col = vec![0.0; xd.c * win.kh * win.kw * cols];
    for c in 0..xd.c {
        let plane = &x[c * xd.h * xd.w..(c + 1) * xd.h * xd.w];
        for p in 0..win.kh {
            let (ilo, ihi) = win.valid_range(p, xd.h, ho);
            for q in 0..win.kw {
                let (jlo, jhi) = win.valid_range(q, xd.w, wo);
                let row = ((c * win.kh + p) * win.kw + q) * cols;
                for i in ilo..ihi {
                    let xi = i * win.stride + p - win.pad;
                    let src = &plane[xi * xd.w..(xi + 1) * xd.w];
                    let dst = &mut col[row + i * wo..row + (i + 1) * wo];
                    for j in jlo..jhi {
                        dst[j] = src[j * win.stride + q - win.pad];
                    }
                }
            }
        }
    }
    col
}

fn col2im(col: &[f64], xd: Dims, win: Window, ho: usize, wo: usize) -> Vec<f64> {
    let cols = ho * wo;
    let mut x = vec![0.0; xd.len()];
    for c in 0..xd.c {
        let plane = &mut x[c * xd.h * xd.w..(c + 1) * xd.h * xd.w];
        for p in 0..win.kh {
            let (ilo, ihi) = win.valid_range(p, xd.h, ho);
            for q in 0..win.kw {
                let (jlo, jhi) = win.valid_range(q, xd.w, wo);
                let row = ((c * win.kh + p) * win.kw + q) * cols;
                for i in ilo..ihi {
                    let xi = i * win.stride + p - win.pad;
                    let src = &col[row + i * wo..row + (i + 1) * wo];
                    let dst = &mut plane[xi * xd.w..(xi + 1) * xd.w];
                    for j in jlo..jhi {
                        dst[j * win.stride + q - win.pad] += src[j];
                    }
                }
            }
        }
    }
    x
}

/// `c[m×n] = a[m×k] · b[k×n]` with explicit row/column strides for `a` and `b`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].fill(0.0);
        return;
    }
    // SAFETY: the strides describe matrices lying entirely within `a`, `b`
    // and `c`; every caller derives them from buffer extents checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Cross-correlation of `x` with a `c_out×c_in×kh×kw` kernel bank.
pub(crate) fn correlate(x: &[f64], xd: Dims, k: &[f64], c_out: usize, win: Window) -> (Vec<f64>, Dims) {
    let ho = win.out_extent(xd.h, win.kh).expect("kernel fits input");
    let wo = win.out_extent(xd.w, win.kw).expect("kernel fits input");
    let inner = xd.c * win.kh * win.kw;
    debug_assert_eq!(k.len(), c_out * inner);
    let col = im2col(x, xd, win, ho, wo);
    let mut y = vec![0.0; c_out * ho * wo];
    gemm(c_out, inner, ho * wo, k, inner, 1, &col, ho * wo, 1, &mut y);
    (y, Dims::new(c_out, ho, wo))
}

/// Adjoint of [`correlate`] in its input: scatters `y` (`c_y×h_y×w_y`) through a
/// `c_y×c_t×kh×kw` kernel bank into a `c_t×target.h×target.w` buffer.
pub(crate) fn scatter(y: &[f64], yd: Dims, k: &[f64], target: Dims, win: Window) -> Vec<f64> {
    let inner = target.c * win.kh * win.kw;
    debug_assert_eq!(k.len(), yd.c * inner);
    let cols = yd.h * yd.w;
    let mut col = vec![0.0; inner * cols];
    // col = Kᵀ · Y, with K viewed as a c_y × inner row-major matrix
    gemm(inner, yd.c, cols, k, 1, inner, y, cols, 1, &mut col);
    col2im(&col, target, win, yd.h, yd.w)
}

/// Adjoint of [`correlate`] in its kernel: `dk[o,c,p,q] = Σ dy[o,i,j] · x[c, i·s+p−pad, j·s+q−pad]`.
pub(crate) fn kernel_grad(x: &[f64], xd: Dims, dy: &[f64], dyd: Dims, win: Window) -> Vec<f64> {
    let inner = xd.c * win.kh * win.kw;
    let cols = dyd.h * dyd.w;
    let col = im2col(x, xd, win, dyd.h, dyd.w);
    let mut dk = vec![0.0; dyd.c * inner];
    // dK = dY · colᵀ
    gemm(dyd.c, cols, inner, dy, cols, 1, &col, 1, cols, &mut dk);
    dk
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadruple-loop cross-correlation.
    fn naive_correlate(x: &[f64], xd: Dims, k: &[f64], c_out: usize, win: Window) -> Vec<f64> {
        let ho = win.out_extent(xd.h, win.kh).unwrap();
        let wo = win.out_extent(xd.w, win.kw).unwrap();
        let mut y = vec![0.0; c_out * ho * wo];
        for o in 0..c_out {
            for i in 0..ho {
                for j in 0..wo {
                    let mut acc = 0.0;
                    for c in 0..xd.c {
                        for p in 0..win.kh {
                            for q in 0..win.kw {
                                let xi = (i * win.stride + p) as isize - win.pad as isize;
                                let xj = (j * win.stride + q) as isize - win.pad as isize;
                                if xi < 0 || xj < 0 || xi >= xd.h as isize || xj >= xd.w as isize {
                                    continue;
                                }
                                acc += k[((o * xd.c + c) * win.kh + p) * win.kw + q]
                                    * x[(c * xd.h + xi as usize) * xd.w + xj as usize];
                            }
                        }
                    }
                    y[(o * ho + i) * wo + j] = acc;
                }
            }
        }
        y
    }

    fn ramp(n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|i| ((i * 37 % 101) as f64 - 50.0) * scale).collect()
    }

    #[test]
    fn gemm_path_matches_direct_loops() {
        for &(stride, pad, h) in &[(1, 0, 5), (2, 2, 8), (2, 1, 7), (3, 2, 9)] {
            let win = Window { kh: 3, kw: 4, stride, pad };
            let xd = Dims::new(2, h, h + 1);
            let x = ramp(xd.len(), 0.01);
            let k = ramp(3 * 2 * 12, 0.03);
            let (y, _) = correlate(&x, xd, &k, 3, win);
            let expect = naive_correlate(&x, xd, &k, 3, win);
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scatter_and_kernel_grad_are_adjoints() {
        let win = Window { kh: 5, kw: 5, stride: 2, pad: 2 };
        let xd = Dims::new(3, 8, 8);
        let x = ramp(xd.len(), 0.02);
        let k = ramp(4 * 3 * 25, 0.01);
        let (y, yd) = correlate(&x, xd, &k, 4, win);
        let dy = ramp(y.len(), 0.05);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let lhs = dot(&y, &dy);
        let dx = scatter(&dy, yd, &k, xd, win);
        assert!((lhs - dot(&x, &dx)).abs() < 1e-10);
        let dk = kernel_grad(&x, xd, &dy, yd, win);
        assert!((lhs - dot(&k, &dk)).abs() < 1e-10);
    }
}
