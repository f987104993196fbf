//! Dense kernels over row-major `f64` slices.

pub(crate) const LN_EPS: f64 = 1e-5;

/// `x[rows, inner] · w[inner, out] (+ b)`.
pub(crate) fn linear(x: &[f64], rows: usize, inner: usize, w: &[f64], b: Option<&[f64]>, out: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), rows * inner);
    debug_assert_eq!(w.len(), inner * out);
    let mut y = vec![0.0; rows * out];
    for (xr, yr) in x.chunks_exact(inner).zip(y.chunks_exact_mut(out)) {
        if let Some(b) = b {
            yr.copy_from_slice(b);
        }
        for (&a, wk) in xr.iter().zip(w.chunks_exact(out)) {
            for (y, &w) in yr.iter_mut().zip(wk) {
                *y += a * w;
            }
        }
    }
    y
}

/// Accumulates `dw += xᵀ·dy` (and `db += Σ dy`) and returns `dy·wᵀ`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn linear_backward(
    x: &[f64],
    inner: usize,
    w: &[f64],
    out: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: Option<&mut [f64]>,
) -> Vec<f64> {
    let rows = dy.len() / out;
    let mut dx = vec![0.0; rows * inner];
    for ((xr, dyr), dxr) in x.chunks_exact(inner).zip(dy.chunks_exact(out)).zip(dx.chunks_exact_mut(inner)) {
        for ((&a, dwk), (dxk, wk)) in xr
            .iter()
            .zip(dw.chunks_exact_mut(out))
            .zip(dxr.iter_mut().zip(w.chunks_exact(out)))
        {
            let mut acc = 0.0;
            for ((dw, &g), &w) in dwk.iter_mut().zip(dyr).zip(wk) {
                *dw += a * g;
                acc += g * w;
            }
            *dxk = acc;
        }
    }
    if let Some(db) = db {
        for dyr in dy.chunks_exact(out) {
            for (b, &g) in db.iter_mut().zip(dyr) {
                *b += g;
            }
        }
    }
    dx
}

pub(crate) struct NormCache {
    pub xhat: Vec<f64>,
    pub rstd: Vec<f64>,
}

pub(crate) fn layer_norm(x: &[f64], d: usize, gain: &[f64], bias: &[f64]) -> (Vec<f64>, NormCache) {
    let rows = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut rstd = vec![0.0; rows];
    for (r, xr) in x.chunks_exact(d).enumerate() {
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = rs;
        for j in 0..d {
            let h = (xr[j] - mean) * rs;
            xhat[r * d + j] = h;
            y[r * d + j] = gain[j] * h + bias[j];
        }
    }
    (y, NormCache { xhat, rstd })
}

pub(crate) fn layer_norm_backward(
    cache: &NormCache,
    d: usize,
    gain: &[f64],
    dy: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for (r, dyr) in dy.chunks_exact(d).enumerate() {
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..d {
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
            dxhat[j] = dyr[j] * gain[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xh[j];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        let rs = cache.rstd[r];
        for j in 0..d {
            dx[r * d + j] = rs * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub(crate) fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

pub(crate) fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + GELU_A * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
