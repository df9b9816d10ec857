//! Gauss–Legendre rules, barycentric Lagrange interpolation and small FFT helpers.

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::num::NonZeroUsize;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Barycentric weights for arbitrary distinct nodes, scaled to unit max modulus.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    // work on a rescaled copy to avoid under/overflow
    let (lo, hi) = nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let scale = if hi > lo { 4.0 / (hi - lo) } else { 1.0 };
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] /= (nodes[i] - nodes[j]) * scale;
            }
        }
    }
    let m = w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    w.iter_mut().for_each(|x| *x /= m);
    w
}

/// Values of the Lagrange cardinal functions at `x` (second barycentric form).
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    for (i, &xi) in nodes.iter().enumerate() {
        if x == xi {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[i] = 1.0;
            return;
        }
    }
    let mut denom = 0.0;
    for i in 0..nodes.len() {
        let t = bary[i] / (x - nodes[i]);
        out[i] = t;
        denom += t;
    }
    out.iter_mut().for_each(|o| *o /= denom);
}

/// Spectral differentiation matrix (row-major) on the given nodes.
pub fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Integration matrix for one Gauss–Legendre panel: entry (k, l) is the integral
/// over [-1, x_k] of the l-th Lagrange cardinal polynomial.
pub fn cumulative_matrix(nodes: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let bary = barycentric_weights(nodes);
    let (gx, gw) = gauss_legendre(q);
    let mut m = vec![0.0; q * q];
    let mut basis = vec![0.0; q];
    for k in 0..q {
        let half = 0.5 * (nodes[k] + 1.0);
        for (x, w) in gx.iter().zip(&gw) {
            let s = -1.0 + half * (x + 1.0);
            lagrange_basis(nodes, &bary, s, &mut basis);
            for l in 0..q {
                m[k * q + l] += w * half * basis[l];
            }
        }
    }
    m
}

/// In-place FFT over contiguous rows of length `len`. The inverse is unnormalised.
pub fn fft_rows(data: &mut [C64], len: usize, inverse: bool) {
    if len == 0 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    plan.process(data);
}

/// FFT along columns of a row-major (rows x cols) array.
pub fn fft_cols(data: &mut [C64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(rows)
    } else {
        planner.plan_fft_forward(rows)
    };
    let mut col = vec![C64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        plan.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

/// Signed frequency of FFT bin `j` for a transform of length `n` (Nyquist mapped to -n/2).
#[inline]
pub fn freq(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// FFT bin of signed frequency `k` (wrapped).
#[inline]
pub fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
