//! Forward and backward kernels on single `(C, H, W)` tensors.
//!
//! Height is latitude (replicate padding), width is longitude (circular
//! padding). Convolutions lower to GEMM; outputs are seeded with the bias
//! before accumulation so every output cell follows the same arithmetic
//! regardless of its column, which keeps longitude rolls exact.

use super::real::Real;
use super::tensor::Tensor;

/// `(C * 9, H * W)` patch matrix; row `c * 9 + ky * 3 + kx`.
pub fn im2col3<R: Real>(x: &Tensor<R>) -> Vec<R> {
    let (c, h, w) = x.shape();
    let hw = h * w;
    let mut cols = vec![R::zero(); c * 9 * hw];
    for ci in 0..c {
        let src = x.channel(ci);
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(ci * 9 + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = (y + ky).saturating_sub(1).min(h - 1);
                    let s = &src[sy * w..(sy + 1) * w];
                    let d = &mut row[y * w..(y + 1) * w];
                    match kx {
                        0 => {
                            d[0] = s[w - 1];
                            d[1..].copy_from_slice(&s[..w - 1]);
                        }
                        1 => d.copy_from_slice(s),
                        _ => {
                            d[..w - 1].copy_from_slice(&s[1..]);
                            d[w - 1] = s[0];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col3`]: scatters patch gradients back onto `dx`.
pub fn col2im3_add<R: Real>(cols: &[R], dx: &mut Tensor<R>) {
    let (c, h, w) = dx.shape();
    let hw = h * w;
    for ci in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(ci * 9 + ky * 3 + kx) * hw..][..hw];
                let dst = &mut dx.data[ci * hw..(ci + 1) * hw];
                for y in 0..h {
                    let sy = (y + ky).saturating_sub(1).min(h - 1);
                    for x in 0..w {
                        let sx = (x + w + kx - 1) % w;
                        dst[sy * w + sx] = dst[sy * w + sx] + row[y * w + x];
                    }
                }
            }
        }
    }
}

fn bias_seeded<R: Real>(bias: &[R], c: usize, h: usize, w: usize) -> Tensor<R> {
    let hw = h * w;
    let mut data = Vec::with_capacity(c * hw);
    for &b in bias {
        data.extend(std::iter::repeat_n(b, hw));
    }
    Tensor::from_vec(c, h, w, data)
}

fn add_channel_sums<R: Real>(dout: &Tensor<R>, db: &mut [R]) {
    for (co, d) in db.iter_mut().enumerate() {
        *d = *d + dout.channel(co).iter().copied().sum::<R>();
    }
}

/// 3x3 convolution, weight `(Cout, Cin, 3, 3)`. Returns the output and
/// the patch matrix needed by [`conv3_backward`].
pub fn conv3_forward<R: Real>(x: &Tensor<R>, weight: &[R], bias: &[R]) -> (Tensor<R>, Vec<R>) {
    let cout = bias.len();
    let k = x.c * 9;
    assert_eq!(weight.len(), cout * k, "conv3 weight shape");
    let cols = im2col3(x);
    let hw = x.plane();
    let mut out = bias_seeded(bias, cout, x.h, x.w);
    R::gemm(
        cout,
        k,
        hw,
        R::one(),
        weight,
        k as isize,
        1,
        &cols,
        hw as isize,
        1,
        R::one(),
        &mut out.data,
        hw as isize,
        1,
    );
    (out, cols)
}

/// Accumulates weight and bias gradients; returns the input gradient.
pub fn conv3_backward<R: Real>(
    dout: &Tensor<R>,
    cols: &[R],
    weight: &[R],
    cin: usize,
    dw: &mut [R],
    db: &mut [R],
) -> Tensor<R> {
    let cout = dout.c;
    let k = cin * 9;
    let hw = dout.plane();
    R::gemm(
        cout,
        hw,
        k,
        R::one(),
        &dout.data,
        hw as isize,
        1,
        cols,
        1,
        hw as isize,
        R::one(),
        dw,
        k as isize,
        1,
    );
    add_channel_sums(dout, db);
    let mut dcols = vec![R::zero(); k * hw];
    R::gemm(
        k,
        cout,
        hw,
        R::one(),
        weight,
        1,
        k as isize,
        &dout.data,
        hw as isize,
        1,
        R::zero(),
        &mut dcols,
        hw as isize,
        1,
    );
    let mut dx = Tensor::zeros(cin, dout.h, dout.w);
    col2im3_add(&dcols, &mut dx);
    dx
}

/// 1x1 convolution, weight `(Cout, Cin)`.
pub fn conv1_forward<R: Real>(x: &Tensor<R>, weight: &[R], bias: &[R]) -> Tensor<R> {
    let cout = bias.len();
    assert_eq!(weight.len(), cout * x.c, "conv1 weight shape");
    let hw = x.plane();
    let mut out = bias_seeded(bias, cout, x.h, x.w);
    R::gemm(
        cout,
        x.c,
        hw,
        R::one(),
        weight,
        x.c as isize,
        1,
        &x.data,
        hw as isize,
        1,
        R::one(),
        &mut out.data,
        hw as isize,
        1,
    );
    out
}

pub fn conv1_backward<R: Real>(dout: &Tensor<R>, x: &Tensor<R>, weight: &[R], dw: &mut [R], db: &mut [R]) -> Tensor<R> {
    let (cout, cin, hw) = (dout.c, x.c, x.plane());
    R::gemm(
        cout,
        hw,
        cin,
        R::one(),
        &dout.data,
        hw as isize,
        1,
        &x.data,
        1,
        hw as isize,
        R::one(),
        dw,
        cin as isize,
        1,
    );
    add_channel_sums(dout, db);
    let mut dx = Tensor::zeros(cin, x.h, x.w);
    R::gemm(
        cin,
        cout,
        hw,
        R::one(),
        weight,
        1,
        cin as isize,
        &dout.data,
        hw as isize,
        1,
        R::zero(),
        &mut dx.data,
        hw as isize,
        1,
    );
    dx
}

/// 2x2 stride-2 transposed convolution, weight `(Cin, Cout, 2, 2)`:
/// `out[co, 2y+dy, 2x+dx] = b[co] + sum_ci w[ci, co, dy, dx] * x[ci, y, x]`.
pub fn convt_forward<R: Real>(x: &Tensor<R>, weight: &[R], bias: &[R]) -> Tensor<R> {
    let cout = bias.len();
    let c4 = cout * 4;
    assert_eq!(weight.len(), x.c * c4, "convT weight shape");
    let hw = x.plane();
    let mut y4 = vec![R::zero(); c4 * hw];
    R::gemm(
        c4,
        x.c,
        hw,
        R::one(),
        weight,
        1,
        c4 as isize,
        &x.data,
        hw as isize,
        1,
        R::zero(),
        &mut y4,
        hw as isize,
        1,
    );
    let (h2, w2) = (2 * x.h, 2 * x.w);
    let mut out = Tensor::zeros(cout, h2, w2);
    for co in 0..cout {
        for d in 0..4 {
            let (dy, dx) = (d / 2, d % 2);
            let src = &y4[(co * 4 + d) * hw..][..hw];
            for y in 0..x.h {
                for xx in 0..x.w {
                    out.data[(co * h2 + 2 * y + dy) * w2 + 2 * xx + dx] = src[y * x.w + xx] + bias[co];
                }
            }
        }
    }
    out
}

/// Gathers a `(Cout, 2H, 2W)` field into `(Cout * 4, H * W)` phases.
fn gather_phases<R: Real>(z: &Tensor<R>) -> Vec<R> {
    let (h, w) = (z.h / 2, z.w / 2);
    let hw = h * w;
    let mut out = vec![R::zero(); z.c * 4 * hw];
    for co in 0..z.c {
        for d in 0..4 {
            let (dy, dx) = (d / 2, d % 2);
            let dst = &mut out[(co * 4 + d) * hw..][..hw];
            for y in 0..h {
                for x in 0..w {
                    dst[y * w + x] = z.at(co, 2 * y + dy, 2 * x + dx);
                }
            }
        }
    }
    out
}

/// 2x2 stride-2 convolution with the transposed-convolution weight
/// layout, no bias: the adjoint of [`convt_forward`] without bias.
pub fn conv_s2_forward<R: Real>(z: &Tensor<R>, weight: &[R], cin: usize) -> Tensor<R> {
    assert!(
        z.h.is_multiple_of(2) && z.w.is_multiple_of(2),
        "stride-2 conv needs even dims"
    );
    let c4 = z.c * 4;
    assert_eq!(weight.len(), cin * c4, "stride-2 conv weight shape");
    let phases = gather_phases(z);
    let (h, w) = (z.h / 2, z.w / 2);
    let hw = h * w;
    let mut out = Tensor::zeros(cin, h, w);
    R::gemm(
        cin,
        c4,
        hw,
        R::one(),
        weight,
        c4 as isize,
        1,
        &phases,
        hw as isize,
        1,
        R::zero(),
        &mut out.data,
        hw as isize,
        1,
    );
    out
}

pub fn convt_backward<R: Real>(dout: &Tensor<R>, x: &Tensor<R>, weight: &[R], dw: &mut [R], db: &mut [R]) -> Tensor<R> {
    let c4 = dout.c * 4;
    let hw = x.plane();
    let phases = gather_phases(dout);
    R::gemm(
        x.c,
        hw,
        c4,
        R::one(),
        &x.data,
        hw as isize,
        1,
        &phases,
        1,
        hw as isize,
        R::one(),
        dw,
        c4 as isize,
        1,
    );
    add_channel_sums(dout, db);
    let mut dx = Tensor::zeros(x.c, x.h, x.w);
    R::gemm(
        x.c,
        c4,
        hw,
        R::one(),
        weight,
        c4 as isize,
        1,
        &phases,
        hw as isize,
        1,
        R::zero(),
        &mut dx.data,
        hw as isize,
        1,
    );
    dx
}

/// Mean of each 2x2 block. Panics on odd dims.
pub fn avgpool2<R: Real>(x: &Tensor<R>) -> Tensor<R> {
    assert!(
        x.h.is_multiple_of(2) && x.w.is_multiple_of(2),
        "average pooling needs even dims"
    );
    let (h, w) = (x.h / 2, x.w / 2);
    let quarter = R::from_f64_lossy(0.25);
    let mut out = Tensor::zeros(x.c, h, w);
    for c in 0..x.c {
        for y in 0..h {
            for xx in 0..w {
                let s = x.at(c, 2 * y, 2 * xx)
                    + x.at(c, 2 * y, 2 * xx + 1)
                    + x.at(c, 2 * y + 1, 2 * xx)
                    + x.at(c, 2 * y + 1, 2 * xx + 1);
                out.data[(c * h + y) * w + xx] = s * quarter;
            }
        }
    }
    out
}

pub fn avgpool2_backward<R: Real>(dout: &Tensor<R>) -> Tensor<R> {
    let (h2, w2) = (dout.h * 2, dout.w * 2);
    let quarter = R::from_f64_lossy(0.25);
    let mut dx = Tensor::zeros(dout.c, h2, w2);
    for c in 0..dout.c {
        for y in 0..h2 {
            for x in 0..w2 {
                dx.data[(c * h2 + y) * w2 + x] = dout.at(c, y / 2, x / 2) * quarter;
            }
        }
    }
    dx
}

pub fn relu<R: Real>(x: &Tensor<R>) -> Tensor<R> {
    x.map(|v| v.max(R::zero()))
}

/// Gradient through ReLU given its output.
pub fn relu_backward<R: Real>(dout: &Tensor<R>, out: &Tensor<R>) -> Tensor<R> {
    let data = dout
        .data
        .iter()
        .zip(&out.data)
        .map(|(&d, &o)| if o > R::zero() { d } else { R::zero() })
        .collect();
    Tensor::from_vec(dout.c, dout.h, dout.w, data)
}

pub fn add<R: Real>(a: &Tensor<R>, b: &Tensor<R>) -> Tensor<R> {
    assert_eq!(a.shape(), b.shape(), "add shape");
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect();
    Tensor::from_vec(a.c, a.h, a.w, data)
}

/// Channel concatenation. Panics on spatial mismatch.
pub fn concat<R: Real>(parts: &[&Tensor<R>]) -> Tensor<R> {
    let (h, w) = (parts[0].h, parts[0].w);
    let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
    for p in parts {
        assert_eq!((p.h, p.w), (h, w), "concat spatial dims");
        data.extend_from_slice(&p.data);
    }
    let c = parts.iter().map(|p| p.c).sum();
    Tensor::from_vec(c, h, w, data)
}

/// `((a + b) + (c + d)) * 0.25`, exact when all four are equal.
pub fn mean4<R: Real>(t: [&Tensor<R>; 4]) -> Tensor<R> {
    let quarter = R::from_f64_lossy(0.25);
    let n = t[0].data.len();
    let data = (0..n)
        .map(|i| ((t[0].data[i] + t[1].data[i]) + (t[2].data[i] + t[3].data[i])) * quarter)
        .collect();
    Tensor::from_vec(t[0].c, t[0].h, t[0].w, data)
}
