//! Forward and adjoint kernels for the convolution family and activations.
//! All functions work on raw `[C,H,W]` buffers and never allocate more than
//! their outputs and one im2col buffer.

/// `c = beta·c + op(a)·op(b)` with `op(a)` of size `m×k` and `op(b)` of size
/// `k×n`, all row-major and contiguous before transposition.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every access made through the strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn pointwise_forward(x: &[f64], cin: usize, plane: usize, w: &[f64], b: &[f64], cout: usize) -> Vec<f64> {
    let mut y = vec![0.0; cout * plane];
    for co in 0..cout {
        y[co * plane..(co + 1) * plane].iter_mut().for_each(|v| *v = b[co]);
    }
    gemm(cout, cin, plane, w, false, x, false, 1.0, &mut y);
    y
}

/// Returns `(gx, gw, gb)`.
pub fn pointwise_backward(
    x: &[f64],
    cin: usize,
    plane: usize,
    w: &[f64],
    cout: usize,
    gy: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; cin * plane];
    gemm(cin, cout, plane, w, true, gy, false, 0.0, &mut gx);
    let mut gw = vec![0.0; cout * cin];
    gemm(cout, plane, cin, gy, false, x, true, 0.0, &mut gw);
    let gb = (0..cout)
        .map(|co| gy[co * plane..(co + 1) * plane].iter().sum())
        .collect();
    (gx, gw, gb)
}

/// Valid index ranges for a 3×3 tap offset `d ∈ {-1, 0, 1}` with zero padding.
#[inline]
fn tap_range(d: isize, n: usize) -> (usize, usize) {
    let lo = if d < 0 { 1 } else { 0 };
    let hi = if d > 0 { n.saturating_sub(1) } else { n };
    (lo, hi)
}

pub fn depthwise_forward(x: &[f64], c: usize, h: usize, w: usize, wt: &[f64], b: &[f64]) -> Vec<f64> {
    let plane = h * w;
    let mut y = vec![0.0; c * plane];
    for ci in 0..c {
        let xs = &x[ci * plane..(ci + 1) * plane];
        let ys = &mut y[ci * plane..(ci + 1) * plane];
        ys.iter_mut().for_each(|v| *v = b[ci]);
        for di in -1isize..=1 {
            let (i0, i1) = tap_range(di, h);
            for dj in -1isize..=1 {
                let (j0, j1) = tap_range(dj, w);
                let k = wt[ci * 9 + ((di + 1) * 3 + dj + 1) as usize];
                for i in i0..i1 {
                    let si = (i as isize + di) as usize;
                    let yr = &mut ys[i * w + j0..i * w + j1];
                    let xr = &xs[si * w + (j0 as isize + dj) as usize..si * w + (j1 as isize + dj) as usize];
                    for (yv, xv) in yr.iter_mut().zip(xr) {
                        *yv += k * xv;
                    }
                }
            }
        }
    }
    y
}

pub fn depthwise_backward(
    x: &[f64],
    c: usize,
    h: usize,
    w: usize,
    wt: &[f64],
    gy: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let plane = h * w;
    let mut gx = vec![0.0; c * plane];
    let mut gw = vec![0.0; c * 9];
    let mut gb = vec![0.0; c];
    for ci in 0..c {
        let xs = &x[ci * plane..(ci + 1) * plane];
        let gys = &gy[ci * plane..(ci + 1) * plane];
        let gxs = &mut gx[ci * plane..(ci + 1) * plane];
        gb[ci] = gys.iter().sum();
        for di in -1isize..=1 {
            let (i0, i1) = tap_range(di, h);
            for dj in -1isize..=1 {
                let (j0, j1) = tap_range(dj, w);
                let t = ci * 9 + ((di + 1) * 3 + dj + 1) as usize;
                let k = wt[t];
                let mut acc = 0.0;
                for i in i0..i1 {
                    let si = (i as isize + di) as usize;
                    let sj0 = (j0 as isize + dj) as usize;
                    let gr = &gys[i * w + j0..i * w + j1];
                    let xr = &xs[si * w + sj0..si * w + sj0 + (j1 - j0)];
                    let gxr = &mut gxs[si * w + sj0..si * w + sj0 + (j1 - j0)];
                    for ((g, xv), gxv) in gr.iter().zip(xr).zip(gxr.iter_mut()) {
                        acc += g * xv;
                        *gxv += k * g;
                    }
                }
                gw[t] = acc;
            }
        }
    }
    (gx, gw, gb)
}

/// `[Cin, H, W]` → `[Cin·9, H·W]` patches with zero padding.
fn im2col(x: &[f64], cin: usize, h: usize, w: usize) -> Vec<f64> {
    let plane = h * w;
    let mut cols = vec![0.0; cin * 9 * plane];
    for ci in 0..cin {
        let xs = &x[ci * plane..(ci + 1) * plane];
        for di in -1isize..=1 {
            let (i0, i1) = tap_range(di, h);
            for dj in -1isize..=1 {
                let (j0, j1) = tap_range(dj, w);
                let row = (ci * 9 + ((di + 1) * 3 + dj + 1) as usize) * plane;
                for i in i0..i1 {
                    let si = (i as isize + di) as usize;
                    let sj0 = (j0 as isize + dj) as usize;
                    cols[row + i * w + j0..row + i * w + j1]
                        .copy_from_slice(&xs[si * w + sj0..si * w + sj0 + (j1 - j0)]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], cin: usize, h: usize, w: usize) -> Vec<f64> {
    let plane = h * w;
    let mut x = vec![0.0; cin * plane];
    for ci in 0..cin {
        let xs = &mut x[ci * plane..(ci + 1) * plane];
        for di in -1isize..=1 {
            let (i0, i1) = tap_range(di, h);
            for dj in -1isize..=1 {
                let (j0, j1) = tap_range(dj, w);
                let row = (ci * 9 + ((di + 1) * 3 + dj + 1) as usize) * plane;
                for i in i0..i1 {
                    let si = (i as isize + di) as usize;
                    let sj0 = (j0 as isize + dj) as usize;
                    let src = &cols[row + i * w + j0..row + i * w + j1];
                    for (d, s) in xs[si * w + sj0..si * w + sj0 + (j1 - j0)].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }
    x
}

/// Dense 3×3 convolution (cross-correlation), zero padding 1.
pub fn conv3x3_forward(
    x: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    wt: &[f64],
    b: &[f64],
    cout: usize,
) -> Vec<f64> {
    let plane = h * w;
    let cols = im2col(x, cin, h, w);
    let mut y = vec![0.0; cout * plane];
    for co in 0..cout {
        y[co * plane..(co + 1) * plane].iter_mut().for_each(|v| *v = b[co]);
    }
    gemm(cout, cin * 9, plane, wt, false, &cols, false, 1.0, &mut y);
    y
}

#[allow(clippy::too_many_arguments)]
pub fn conv3x3_backward(
    x: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    wt: &[f64],
    cout: usize,
    gy: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let plane = h * w;
    let cols = im2col(x, cin, h, w);
    let mut gw = vec![0.0; cout * cin * 9];
    gemm(cout, plane, cin * 9, gy, false, &cols, true, 0.0, &mut gw);
    let mut gcols = vec![0.0; cin * 9 * plane];
    gemm(cin * 9, cout, plane, wt, true, gy, false, 0.0, &mut gcols);
    let gx = col2im(&gcols, cin, h, w);
    let gb = (0..cout)
        .map(|co| gy[co * plane..(co + 1) * plane].iter().sum())
        .collect();
    (gx, gw, gb)
}

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF via `erf`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * INV_SQRT_2))
}

/// Exact GELU, `x·Φ(x)`.
#[inline]
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    normal_cdf(x) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}
