//! Polar grids and scalar fields on the unit disc.

use super::quadrature::{
    barycentric_weights, differentiation_matrix, fft_rows, freq, gauss_legendre, lagrange_basis,
};
use crate::error::{AtrtError, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub type Analytic = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Tensor grid of Gauss–Legendre radii in (0,1) and uniform angles.
#[derive(Debug)]
pub struct PolarGrid {
    n_rho: usize,
    n_beta: usize,
    rho: Vec<f64>,
    rho_weights: Vec<f64>,
    bary: Vec<f64>,
    diff: Vec<f64>,
    cache_cells: usize,
}

impl PolarGrid {
    pub fn new(n_rho: usize, n_beta: usize) -> Result<Arc<Self>> {
        Self::with_cache(n_rho, n_beta, 256)
    }

    /// `cache_cells` sets the Cartesian resolution used for bulk off-grid sampling.
    pub fn with_cache(n_rho: usize, n_beta: usize, cache_cells: usize) -> Result<Arc<Self>> {
        if n_rho < 2 || n_beta < 2 || n_beta % 2 != 0 {
            return Err(AtrtError::InvalidArgument(format!(
                "polar grid needs n_rho >= 2 and even n_beta >= 2 (got {n_rho}, {n_beta})"
            )));
        }
        let (x, w) = gauss_legendre(n_rho);
        let rho: Vec<f64> = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let rho_weights: Vec<f64> = w.iter().zip(&rho).map(|(w, r)| 0.5 * w * r).collect();
        let bary = barycentric_weights(&rho);
        let diff = differentiation_matrix(&rho, &bary);
        Ok(Arc::new(Self {
            n_rho,
            n_beta,
            rho,
            rho_weights,
            bary,
            diff,
            cache_cells: cache_cells.max(16),
        }))
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }
    pub fn n_beta(&self) -> usize {
        self.n_beta
    }
    pub fn len(&self) -> usize {
        self.n_rho * self.n_beta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn cache_cells(&self) -> usize {
        self.cache_cells
    }
    pub fn beta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_beta as f64
    }
    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::from_polar(self.rho[i], self.beta(j))
    }
    /// Area quadrature weight of node (i, j).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let _ = j;
        self.rho_weights[i] * 2.0 * PI / self.n_beta as f64
    }
    pub fn points(&self) -> Vec<C64> {
        (0..self.n_rho)
            .flat_map(|i| (0..self.n_beta).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }
    /// Sum of all area weights (π up to quadrature error).
    pub fn total_weight(&self) -> f64 {
        (0..self.n_rho).map(|i| self.weight(i, 0)).sum::<f64>() * self.n_beta as f64
    }
    pub fn same_as(&self, other: &PolarGrid) -> bool {
        self.n_rho == other.n_rho && self.n_beta == other.n_beta
    }
    pub(crate) fn radial_basis(&self, r: f64, out: &mut [f64]) {
        lagrange_basis(&self.rho, &self.bary, r, out);
    }
    pub(crate) fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }
}

/// Cartesian tabulation used for fast repeated evaluation along rays (cubic Lagrange).
#[derive(Debug)]
pub struct CartesianCache {
    h: f64,
    origin: f64,
    n: usize,
    vals: Vec<C64>,
}

impl CartesianCache {
    fn build(field: &DiscField) -> Self {
        let cells = field.grid.cache_cells;
        let h = 2.0 / cells as f64;
        let pad = 4usize;
        let n = cells + 1 + 2 * pad;
        let origin = -1.0 - pad as f64 * h;
        let reach = 1.0 + 3.0 * h * std::f64::consts::SQRT_2;
        let modes = field.modes();
        let grid = &field.grid;
        let vals: Vec<C64> = (0..n * n)
            .into_par_iter()
            .map_init(
                || vec![0.0; grid.n_rho],
                |basis, idx| {
                    let (iy, ix) = (idx / n, idx % n);
                    let z = C64::new(origin + ix as f64 * h, origin + iy as f64 * h);
                    if z.norm() > reach {
                        ZERO
                    } else {
                        eval_modes(grid, &modes, z, basis)
                    }
                },
            )
            .collect();
        Self { h, origin, n, vals }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let fx = (z.re - self.origin) / self.h;
        let fy = (z.im - self.origin) / self.h;
        let ix = (fx.floor() as isize).clamp(1, self.n as isize - 3) as usize;
        let iy = (fy.floor() as isize).clamp(1, self.n as isize - 3) as usize;
        let wx = cubic_weights(fx - ix as f64);
        let wy = cubic_weights(fy - iy as f64);
        let mut acc = ZERO;
        for (b, wyb) in wy.iter().enumerate() {
            let row = (iy + b - 1) * self.n + ix - 1;
            let mut r = ZERO;
            for (a, wxa) in wx.iter().enumerate() {
                r += self.vals[row + a] * wxa;
            }
            acc += r * wyb;
        }
        acc
    }
}

#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

fn eval_modes(grid: &PolarGrid, modes: &[C64], z: C64, basis: &mut [f64]) -> C64 {
    let r = z.norm();
    let nb = grid.n_beta;
    grid.radial_basis(r, basis);
    let e1 = if r > 0.0 { z / r } else { C64::new(1.0, 0.0) };
    let mut acc = ZERO;
    // positive frequencies
    let mut ph = C64::new(1.0, 0.0);
    let half = nb / 2;
    for n in 0..half {
        let mut c = ZERO;
        for (i, b) in basis.iter().enumerate() {
            c += modes[i * nb + n] * b;
        }
        acc += c * ph;
        ph *= e1;
    }
    let e1c = e1.conj();
    let mut ph = e1c;
    for n in 1..half {
        let j = nb - n;
        let mut c = ZERO;
        for (i, b) in basis.iter().enumerate() {
            c += modes[i * nb + j] * b;
        }
        acc += c * ph;
        ph *= e1c;
    }
    acc
}

/// A complex field on the unit disc: samples on a polar grid, optionally backed by
/// an exact evaluator.
#[derive(Clone)]
pub struct DiscField {
    pub name: String,
    grid: Arc<PolarGrid>,
    values: Vec<C64>,
    analytic: Option<Analytic>,
    cache: Arc<OnceLock<CartesianCache>>,
}

impl fmt::Debug for DiscField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscField")
            .field("name", &self.name)
            .field("n_rho", &self.grid.n_rho)
            .field("n_beta", &self.grid.n_beta)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl DiscField {
    pub fn from_values(grid: &Arc<PolarGrid>, name: &str, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(AtrtError::GridMismatch(format!(
                "{} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(AtrtError::InvalidArgument(format!("non-finite values in {name}")));
        }
        Ok(Self {
            name: name.to_string(),
            grid: grid.clone(),
            values,
            analytic: None,
            cache: Arc::new(OnceLock::new()),
        })
    }

    /// Analytic field: exact off-grid evaluation, sampled on the grid.
    pub fn analytic<F>(grid: &Arc<PolarGrid>, name: &str, f: F) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        Self::from_analytic(grid, name, Arc::new(f))
    }

    pub fn from_analytic(grid: &Arc<PolarGrid>, name: &str, f: Analytic) -> Self {
        let values = grid.points().into_iter().map(|z| f(z)).collect();
        Self {
            name: name.to_string(),
            grid: grid.clone(),
            values,
            analytic: Some(f),
            cache: Arc::new(OnceLock::new()),
        }
    }

    pub fn zeros(grid: &Arc<PolarGrid>, name: &str) -> Self {
        Self::analytic(grid, name, |_| ZERO)
    }

    pub fn constant(grid: &Arc<PolarGrid>, name: &str, c: C64) -> Self {
        Self::analytic(grid, name, move |_| c)
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn value(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid.n_beta + j]
    }
    pub fn is_analytic(&self) -> bool {
        self.analytic.is_some()
    }
    pub fn analytic_fn(&self) -> Option<Analytic> {
        self.analytic.clone()
    }
    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
    /// Drops the exact evaluator, keeping only samples.
    pub fn to_grid_only(&self) -> Self {
        Self {
            name: self.name.clone(),
            grid: self.grid.clone(),
            values: self.values.clone(),
            analytic: None,
            cache: Arc::new(OnceLock::new()),
        }
    }
    /// Resample onto another polar grid (exact for analytic fields).
    pub fn resample(&self, grid: &Arc<PolarGrid>) -> Self {
        if let Some(f) = &self.analytic {
            return Self::from_analytic(grid, &self.name, f.clone());
        }
        let values = grid.points().iter().map(|&z| self.eval(z)).collect();
        Self::from_values(grid, &self.name, values).expect("finite")
    }

    /// Angular Fourier modes per ring, FFT ordering, normalised so that
    /// value = Σ_n modes[n] e^{inβ}.
    pub fn modes(&self) -> Vec<C64> {
        let nb = self.grid.n_beta;
        let mut m = self.values.clone();
        fft_rows(&mut m, nb, false);
        let s = 1.0 / nb as f64;
        m.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn from_modes(grid: &Arc<PolarGrid>, name: &str, modes: Vec<C64>) -> Result<Self> {
        let nb = grid.n_beta;
        let mut v = modes;
        fft_rows(&mut v, nb, true);
        Self::from_values(grid, name, v)
    }

    /// Point evaluation: exact if analytic, otherwise spectral (angular Fourier
    /// times radial polynomial interpolation).
    pub fn eval(&self, z: C64) -> C64 {
        if let Some(f) = &self.analytic {
            return f(z);
        }
        let mut basis = vec![0.0; self.grid.n_rho];
        eval_modes(&self.grid, &self.modes(), z, &mut basis)
    }

    /// Evaluate at many points (spectral path shares the mode computation).
    pub fn eval_many(&self, zs: &[C64]) -> Vec<C64> {
        if let Some(f) = &self.analytic {
            return zs.par_iter().map(|&z| f(z)).collect();
        }
        let modes = self.modes();
        let g = &self.grid;
        zs.par_iter()
            .map_init(|| vec![0.0; g.n_rho], |b, &z| eval_modes(g, &modes, z, b))
            .collect()
    }

    /// Fast evaluator for dense off-grid use (rays).
    pub fn sampler(&self) -> DiscSampler<'_> {
        match &self.analytic {
            Some(f) => DiscSampler::Analytic(f.as_ref()),
            None => DiscSampler::Cached(self.cache.get_or_init(|| CartesianCache::build(self))),
        }
    }

    fn zip_with(&self, other: &DiscField, name: &str, op: fn(C64, C64) -> C64) -> DiscField {
        assert!(self.grid.same_as(&other.grid), "disc fields on different grids");
        if let (Some(a), Some(b)) = (&self.analytic, &other.analytic) {
            let (a, b) = (a.clone(), b.clone());
            return Self::from_analytic(&self.grid, name, Arc::new(move |z| op(a(z), b(z))));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| op(x, y))
            .collect();
        Self::from_values(&self.grid, name, values).expect("finite")
    }

    pub fn add(&self, other: &DiscField) -> DiscField {
        self.zip_with(other, &self.name, |a, b| a + b)
    }
    pub fn sub(&self, other: &DiscField) -> DiscField {
        self.zip_with(other, &self.name, |a, b| a - b)
    }
    pub fn mul(&self, other: &DiscField) -> DiscField {
        self.zip_with(other, &self.name, |a, b| a * b)
    }
    pub fn scale(&self, c: C64) -> DiscField {
        self.map(move |v| v * c)
    }
    pub fn conj(&self) -> DiscField {
        self.map(|v| v.conj())
    }
    /// Pointwise map applied to values (and composed with the evaluator if present).
    pub fn map<F>(&self, op: F) -> DiscField
    where
        F: Fn(C64) -> C64 + Send + Sync + Clone + 'static,
    {
        if let Some(a) = &self.analytic {
            let a = a.clone();
            let op2 = op.clone();
            return Self::from_analytic(&self.grid, &self.name, Arc::new(move |z| op2(a(z))));
        }
        let values = self.values.iter().map(|&v| op(v)).collect();
        Self::from_values(&self.grid, &self.name, values).expect("finite")
    }

    /// ‖f‖²_M by area quadrature.
    pub fn norm_sq(&self) -> f64 {
        self.masked_norm_sq(f64::INFINITY)
    }
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
    /// ‖f‖²_M restricted to nodes with ρ ≤ rho_max.
    pub fn masked_norm_sq(&self, rho_max: f64) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for i in 0..g.n_rho {
            if g.rho[i] > rho_max {
                continue;
            }
            let w = g.weight(i, 0);
            for j in 0..g.n_beta {
                s += w * self.values[i * g.n_beta + j].norm_sqr();
            }
        }
        s
    }
    /// ⟨f, g⟩_M = ∫ f ḡ.
    pub fn inner(&self, other: &DiscField) -> C64 {
        let g = &self.grid;
        let mut s = ZERO;
        for i in 0..g.n_rho {
            let w = g.weight(i, 0);
            for j in 0..g.n_beta {
                let k = i * g.n_beta + j;
                s += self.values[k] * other.values[k].conj() * w;
            }
        }
        s
    }
    pub fn integral(&self) -> C64 {
        let g = &self.grid;
        let mut s = ZERO;
        for i in 0..g.n_rho {
            let w = g.weight(i, 0);
            for j in 0..g.n_beta {
                s += self.values[i * g.n_beta + j] * w;
            }
        }
        s
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.norm()))
    }
    /// Relative L² distance to `reference` over ρ ≤ rho_max.
    pub fn rel_error(&self, reference: &DiscField, rho_max: f64) -> f64 {
        let d = self.sub(reference).to_grid_only();
        let den = reference.masked_norm_sq(rho_max);
        let num = d.masked_norm_sq(rho_max);
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
    /// Values on the ring nearest the boundary, extrapolated to ρ = 1 per angle.
    pub fn boundary_values(&self, n: usize) -> Vec<C64> {
        (0..n)
            .map(|j| self.eval(C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)))
            .collect()
    }
    /// Signed angular frequency associated with FFT bin j.
    pub fn freq(&self, j: usize) -> i64 {
        freq(j, self.grid.n_beta)
    }
}

/// Borrowed evaluator returned by [`DiscField::sampler`].
pub enum DiscSampler<'a> {
    Analytic(&'a (dyn Fn(C64) -> C64 + Send + Sync)),
    Cached(&'a CartesianCache),
}

impl DiscSampler<'_> {
    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            DiscSampler::Analytic(f) => f(z),
            DiscSampler::Cached(c) => c.eval(z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_pi() {
        let g = PolarGrid::new(24, 32).unwrap();
        assert!((g.total_weight() - PI).abs() < 1e-13);
    }

    #[test]
    fn spectral_eval_reproduces_band_limited_field() {
        let g = PolarGrid::new(20, 32).unwrap();
        let f = DiscField::analytic(&g, "f", |z| z * z * z.conj() + C64::new(0.0, 2.0) * z.conj().powi(3));
        let s = f.to_grid_only();
        for &z in &[C64::new(0.3, -0.2), C64::new(-0.7, 0.69), C64::new(0.0, 0.0), C64::new(1.0, 0.0)] {
            assert!((s.eval(z) - f.eval(z)).norm() < 1e-11);
        }
    }

    #[test]
    fn cartesian_cache_is_fourth_order_accurate() {
        let g = PolarGrid::with_cache(24, 32, 256).unwrap();
        let f = DiscField::analytic(&g, "f", |z| (-(z - C64::new(0.2, 0.1)).norm_sqr() / 0.18).exp().into())
            .to_grid_only();
        let s = f.sampler();
        let z = C64::new(0.123, -0.456);
        let exact = (-(z - C64::new(0.2, 0.1)).norm_sqr() / 0.18f64).exp();
        assert!((s.eval(z) - exact).norm() < 1e-6);
    }

    #[test]
    fn masked_norm_of_constant() {
        let g = PolarGrid::new(16, 16).unwrap();
        let f = DiscField::constant(&g, "one", C64::new(1.0, 0.0));
        assert!((f.norm_sq() - PI).abs() < 1e-12);
    }
}
