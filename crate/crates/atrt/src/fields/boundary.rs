//! Functions on the boundary torus ∂SM in fan-beam coordinates (β, α).

use super::fiber::FiberField;
use super::quadrature::{bin, fft_cols, fft_rows, freq};
use super::Parity;
use crate::error::{AtrtError, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const LAGRANGE_POINTS: usize = 8;

/// Uniform torus grid: β_i = 2πi/N_β, α_j = −π + (j+½)·2π/N_α.
///
/// Incoming rays ∂₊ are the columns j ∈ [N_α/4, 3N_α/4).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryGrid {
    pub n_beta: usize,
    pub n_alpha: usize,
}

impl BoundaryGrid {
    /// Fails unless the scattering maps permute grid nodes.
    pub fn new(n_beta: usize, n_alpha: usize) -> Result<Self> {
        if n_alpha < 4 || n_alpha % 4 != 0 {
            return Err(AtrtError::MisalignedGrid(format!("N_alpha = {n_alpha} must be a positive multiple of 4")));
        }
        if n_beta % n_alpha != 0 {
            return Err(AtrtError::MisalignedGrid(format!(
                "N_alpha = {n_alpha} must divide N_beta = {n_beta}"
            )));
        }
        Ok(Self { n_beta, n_alpha })
    }

    pub fn len(&self) -> usize {
        self.n_beta * self.n_alpha
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn d_beta(&self) -> f64 {
        2.0 * PI / self.n_beta as f64
    }
    pub fn d_alpha(&self) -> f64 {
        2.0 * PI / self.n_alpha as f64
    }
    pub fn beta(&self, i: usize) -> f64 {
        i as f64 * self.d_beta()
    }
    pub fn alpha(&self, j: usize) -> f64 {
        -PI + (j as f64 + 0.5) * self.d_alpha()
    }
    #[inline]
    pub fn is_plus(&self, j: usize) -> bool {
        j >= self.n_alpha / 4 && j < 3 * self.n_alpha / 4
    }
    pub fn plus_range(&self) -> std::ops::Range<usize> {
        self.n_alpha / 4..3 * self.n_alpha / 4
    }
    /// Node index of 𝒮(β_i, α_j) (or 𝒮_A when `antipodal`).
    pub fn scatter_index(&self, i: usize, j: usize, antipodal: bool) -> (usize, usize) {
        let nb = self.n_beta as i64;
        let na = self.n_alpha as i64;
        let shift = nb / 2 + (2 * j as i64 + 1 - na) * (nb / na);
        let ii = (i as i64 + shift).rem_euclid(nb) as usize;
        let jj = if antipodal {
            (na - 1 - j as i64) as usize
        } else {
            (na / 2 - 1 - j as i64).rem_euclid(na) as usize
        };
        (ii, jj)
    }
    pub fn same_as(&self, other: &BoundaryGrid) -> bool {
        self == other
    }
    fn check(&self, other: &BoundaryGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(AtrtError::MisalignedGrid(format!(
                "{}x{} vs {}x{}",
                self.n_beta, self.n_alpha, other.n_beta, other.n_alpha
            )))
        }
    }
}

/// Samples on the full boundary torus, row-major in (β, α).
///
/// Data on ∂₊SM only is represented with zeros on the outgoing half.
#[derive(Clone, Debug)]
pub struct BoundaryField {
    grid: BoundaryGrid,
    values: Vec<C64>,
}

impl BoundaryField {
    pub fn zeros(grid: BoundaryGrid) -> Self {
        Self { grid, values: vec![ZERO; grid.len()] }
    }

    pub fn from_values(grid: BoundaryGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(AtrtError::GridMismatch(format!("{} samples for a {} torus", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    /// Tabulates f(β, α) on the whole torus.
    pub fn from_fn<F: Fn(f64, f64) -> C64 + Sync>(grid: BoundaryGrid, f: F) -> Self {
        let na = grid.n_alpha;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.beta(idx / na), grid.alpha(idx % na)))
            .collect();
        Self { grid, values }
    }

    /// Tabulates f on ∂₊ and fills ∂₋ with zero.
    pub fn from_fn_plus<F: Fn(f64, f64) -> C64 + Sync>(grid: BoundaryGrid, f: F) -> Self {
        let na = grid.n_alpha;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let j = idx % na;
                if grid.is_plus(j) {
                    f(grid.beta(idx / na), grid.alpha(j))
                } else {
                    ZERO
                }
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> BoundaryGrid {
        self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid.n_alpha + j]
    }

    /// Coefficients b_{p,n} of e^{i(pβ+nα)} in FFT ordering (p rows, n columns).
    pub fn coeffs(&self) -> Vec<C64> {
        let (nb, na) = (self.grid.n_beta, self.grid.n_alpha);
        let mut c = self.values.clone();
        fft_rows(&mut c, na, false);
        fft_cols(&mut c, nb, na, false);
        let s = 1.0 / (nb * na) as f64;
        let h = self.grid.d_alpha();
        let phase: Vec<C64> = (0..na)
            .map(|b| {
                let n = freq(b, na) as f64;
                C64::from_polar(s, n * PI - n * h / 2.0)
            })
            .collect();
        for row in c.chunks_mut(na) {
            for (v, ph) in row.iter_mut().zip(&phase) {
                *v *= ph;
            }
        }
        c
    }

    /// Single coefficient b_{p,n} (zero outside the grid band).
    pub fn coeff(&self, p: i64, n: i64) -> C64 {
        let (nb, na) = (self.grid.n_beta as i64, self.grid.n_alpha as i64);
        if 2 * p.abs() >= nb || 2 * n.abs() >= na {
            return ZERO;
        }
        self.coeffs()[bin(p, nb as usize) * na as usize + bin(n, na as usize)]
    }

    pub fn from_coeffs(grid: BoundaryGrid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(AtrtError::GridMismatch("coefficient table size".into()));
        }
        let (nb, na) = (grid.n_beta, grid.n_alpha);
        let h = grid.d_alpha();
        let mut v = coeffs;
        for row in v.chunks_mut(na) {
            for (b, x) in row.iter_mut().enumerate() {
                let n = freq(b, na) as f64;
                *x *= C64::from_polar(1.0, -n * PI + n * h / 2.0);
            }
        }
        fft_cols(&mut v, nb, na, true);
        fft_rows(&mut v, na, true);
        Ok(Self { grid, values: v })
    }

    /// Sum of single Fourier modes.
    pub fn from_modes(grid: BoundaryGrid, modes: &[(i64, i64, C64)]) -> Self {
        Self::from_fn(grid, |b, a| {
            modes
                .iter()
                .map(|&(p, n, c)| c * C64::from_polar(1.0, p as f64 * b + n as f64 * a))
                .sum()
        })
    }

    /// Multiplies α-mode n by −i·sgn(n); modes not kept by `parity` are zeroed first.
    pub fn hilbert(&self, parity: Parity) -> Self {
        self.alpha_multiplier(|n| {
            if parity.keeps(n) {
                C64::new(0.0, -(n.signum() as f64))
            } else {
                ZERO
            }
        })
    }

    /// Applies a diagonal multiplier m(n) on α-modes (Nyquist mode dropped).
    pub fn alpha_multiplier<F: Fn(i64) -> C64 + Sync>(&self, m: F) -> Self {
        let na = self.grid.n_alpha;
        let mult: Vec<C64> = (0..na)
            .map(|b| if 2 * b == na { ZERO } else { m(freq(b, na)) / na as f64 })
            .collect();
        let mut v = self.values.clone();
        fft_rows(&mut v, na, false);
        v.par_chunks_mut(na).for_each(|row| row.iter_mut().zip(&mult).for_each(|(x, m)| *x *= m));
        fft_rows(&mut v, na, true);
        Self { grid: self.grid, values: v }
    }

    /// Pullback u ∘ 𝒮 (or u ∘ 𝒮_A).
    pub fn scatter(&self, antipodal: bool) -> Self {
        let na = self.grid.n_alpha;
        let values = (0..self.grid.len())
            .map(|idx| {
                let (ii, jj) = self.grid.scatter_index(idx / na, idx % na, antipodal);
                self.values[ii * na + jj]
            })
            .collect();
        Self { grid: self.grid, values }
    }

    /// Zeroes the outgoing half.
    pub fn restrict_plus(&self) -> Self {
        let na = self.grid.n_alpha;
        let mut out = self.clone();
        for (idx, v) in out.values.iter_mut().enumerate() {
            if !self.grid.is_plus(idx % na) {
                *v = ZERO;
            }
        }
        out
    }

    /// Data on ∂₊ (row-major over β and the ∂₊ α-columns) extended by zero to ∂SM.
    pub fn extend_by_zero(grid: BoundaryGrid, plus: &[C64]) -> Result<Self> {
        let np = grid.n_alpha / 2;
        if plus.len() != grid.n_beta * np {
            return Err(AtrtError::MisalignedGrid(format!(
                "{} incoming samples for a {}x{} half torus",
                plus.len(),
                grid.n_beta,
                np
            )));
        }
        let mut out = Self::zeros(grid);
        let j0 = grid.n_alpha / 4;
        for i in 0..grid.n_beta {
            for k in 0..np {
                out.values[i * grid.n_alpha + j0 + k] = plus[i * np + k];
            }
        }
        Ok(out)
    }

    /// Samples on the ∂₊ columns, row-major.
    pub fn plus_values(&self) -> Vec<C64> {
        let na = self.grid.n_alpha;
        let r = self.grid.plus_range();
        self.values.chunks(na).flat_map(|row| row[r.clone()].iter().copied()).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a * b)
    }
    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }
    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }
    pub fn map<F: Fn(C64) -> C64 + Sync>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.par_iter().map(|&v| f(v)).collect() }
    }
    /// Pointwise map with access to (β, α).
    pub fn map_with_coords<F: Fn(f64, f64, C64) -> C64 + Sync>(&self, f: F) -> Self {
        let g = self.grid;
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(idx, &v)| f(g.beta(idx / g.n_alpha), g.alpha(idx % g.n_alpha), v))
            .collect();
        Self { grid: g, values }
    }
    fn zip<F: Fn(C64, C64) -> C64>(&self, o: &Self, f: F) -> Self {
        self.grid.check(&o.grid).expect("boundary grids differ");
        Self { grid: self.grid, values: self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect() }
    }
    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.grid.check(&o.grid)?;
        Ok(self.add(o))
    }

    /// ⟨u, v⟩ over ∂₊ with measure dβ dα.
    pub fn inner_plus(&self, o: &Self) -> C64 {
        let na = self.grid.n_alpha;
        let w = self.grid.d_beta() * self.grid.d_alpha();
        let mut s = ZERO;
        for (idx, (a, b)) in self.values.iter().zip(&o.values).enumerate() {
            if self.grid.is_plus(idx % na) {
                s += a * b.conj();
            }
        }
        s * w
    }
    pub fn norm_plus(&self) -> f64 {
        self.inner_plus(self).re.max(0.0).sqrt()
    }
    /// ‖u‖ over the full torus with measure dβ dα.
    pub fn norm_full(&self) -> f64 {
        let w = self.grid.d_beta() * self.grid.d_alpha();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }
    /// Weighted ∂₊ norm with measure cos α dβ dα.
    pub fn norm_plus_cos(&self) -> f64 {
        let na = self.grid.n_alpha;
        let w = self.grid.d_beta() * self.grid.d_alpha();
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.grid.is_plus(idx % na))
            .map(|(idx, v)| v.norm_sqr() * self.grid.alpha(idx % na).cos())
            .sum();
        (s * w).sqrt()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.norm()))
    }
    pub fn max_abs_plus(&self) -> f64 {
        self.restrict_plus().max_abs()
    }

    /// Periodic 8-point tensor Lagrange interpolation at an arbitrary (β, α).
    pub fn eval(&self, beta: f64, alpha: f64) -> C64 {
        let g = self.grid;
        let (wb, ib) = periodic_stencil(beta / g.d_beta(), g.n_beta);
        let (wa, ia) = periodic_stencil((alpha + PI) / g.d_alpha() - 0.5, g.n_alpha);
        let mut acc = ZERO;
        for (x, &i) in wb.iter().zip(&ib) {
            let row = i * g.n_alpha;
            let mut r = ZERO;
            for (y, &j) in wa.iter().zip(&ia) {
                r += self.values[row + j] * y;
            }
            acc += r * x;
        }
        acc
    }

    /// A± extension of the ∂₊ samples: u on ∂₊, ±u∘𝒮 on ∂₋.
    pub fn scatter_extend(&self, sign: f64) -> Self {
        let g = self.grid;
        let na = g.n_alpha;
        let values = (0..g.len())
            .map(|idx| {
                let (i, j) = (idx / na, idx % na);
                if g.is_plus(j) {
                    self.values[idx]
                } else {
                    let (ii, jj) = g.scatter_index(i, j, false);
                    self.values[ii * na + jj] * sign
                }
            })
            .collect();
        Self { grid: g, values }
    }

    /// A±* restriction: u ± u∘𝒮 on ∂₊, zero on ∂₋.
    pub fn scatter_restrict(&self, sign: f64) -> Self {
        let s = self.scatter(false);
        let mut out = self.add(&s.scale(C64::new(sign, 0.0)));
        out = out.restrict_plus();
        out
    }

    /// Spectral partial derivative in β (`wrt_alpha = false`) or α.
    pub fn derivative(&self, wrt_alpha: bool) -> Self {
        let (nb, na) = (self.grid.n_beta, self.grid.n_alpha);
        let mut c = self.values.clone();
        fft_rows(&mut c, na, false);
        fft_cols(&mut c, nb, na, false);
        let s = 1.0 / (nb * na) as f64;
        for (idx, v) in c.iter_mut().enumerate() {
            let (bp, bn) = (idx / na, idx % na);
            let k = if wrt_alpha {
                if 2 * bn == na { 0 } else { freq(bn, na) }
            } else if 2 * bp == nb {
                0
            } else {
                freq(bp, nb)
            };
            *v *= C64::new(0.0, k as f64 * s);
        }
        fft_cols(&mut c, nb, na, true);
        fft_rows(&mut c, na, true);
        Self { grid: self.grid, values: c }
    }

    /// Fiber average on each boundary circle: (1/2π)∫ u(β, θ−β−π) dθ = mean over α.
    pub fn fiber_average(&self) -> Vec<C64> {
        let na = self.grid.n_alpha as f64;
        self.values.chunks(self.grid.n_alpha).map(|r| r.iter().sum::<C64>() / na).collect()
    }

    /// Coefficient of e^{ikθ} on each boundary circle: mode n = k in α times e^{−ik(β+π)}.
    pub fn fiber_mode(&self, k: i64) -> Vec<C64> {
        let g = self.grid;
        self.values
            .chunks(g.n_alpha)
            .enumerate()
            .map(|(i, row)| {
                let s: C64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * C64::from_polar(1.0, -(k as f64) * g.alpha(j)))
                    .sum();
                s / g.n_alpha as f64 * C64::from_polar(1.0, -(k as f64) * (g.beta(i) + PI))
            })
            .collect()
    }
}

/// Weights and wrapped indices for periodic Lagrange interpolation at fractional index `x`.
fn periodic_stencil(x: f64, n: usize) -> ([f64; LAGRANGE_POINTS], [usize; LAGRANGE_POINTS]) {
    let half = LAGRANGE_POINTS as i64 / 2;
    let base = x.floor() as i64;
    let t = x - base as f64;
    let mut w = [0.0; LAGRANGE_POINTS];
    let mut idx = [0usize; LAGRANGE_POINTS];
    let offs: Vec<f64> = (0..LAGRANGE_POINTS as i64).map(|k| (k - half + 1) as f64).collect();
    for k in 0..LAGRANGE_POINTS {
        idx[k] = (base + k as i64 - half + 1).rem_euclid(n as i64) as usize;
        if t == offs[k] {
            w = [0.0; LAGRANGE_POINTS];
            w[k] = 1.0;
            for (m, slot) in idx.iter_mut().enumerate() {
                *slot = (base + m as i64 - half + 1).rem_euclid(n as i64) as usize;
            }
            return (w, idx);
        }
        let mut p = 1.0;
        for (m, &o) in offs.iter().enumerate() {
            if m != k {
                p *= (t - o) / (offs[k] - o);
            }
        }
        w[k] = p;
    }
    (w, idx)
}

/// Trace of a function on SM: u(e^{iβ}, β+π+α) on the torus grid.
pub fn boundary_trace(u: &FiberField, grid: BoundaryGrid) -> BoundaryField {
    let pts: Vec<C64> = (0..grid.n_beta).map(|i| C64::from_polar(1.0, grid.beta(i))).collect();
    let mut traces: Vec<(i32, Vec<C64>)> = Vec::new();
    for (&k, f) in u.stored_modes() {
        traces.push((k, f.eval_many(&pts)));
    }
    BoundaryField::from_fn(grid, |b, a| {
        let i = (b / grid.d_beta()).round() as usize % grid.n_beta;
        let e = C64::from_polar(1.0, b + PI + a);
        traces.iter().map(|(k, t)| t[i] * e.powi(*k)).sum()
    })
}
