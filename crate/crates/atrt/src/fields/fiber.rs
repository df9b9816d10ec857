//! Functions on SM stored as truncated circular harmonics over a polar grid.

use super::disc::{DiscField, PolarGrid};
use super::quadrature::{bin, fft_rows, freq};
use super::Parity;
use crate::error::{AtrtError, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);

/// u(x, θ) = Σ_{|k| ≤ K} u_k(x) e^{ikθ}; absent modes are zero.
#[derive(Clone, Debug)]
pub struct FiberField {
    grid: Arc<PolarGrid>,
    k_max: i32,
    modes: BTreeMap<i32, DiscField>,
}

impl FiberField {
    pub fn zeros(grid: &Arc<PolarGrid>, k_max: i32) -> Self {
        Self { grid: grid.clone(), k_max, modes: BTreeMap::new() }
    }

    /// Degree-0 field.
    pub fn from_disc(f: DiscField, k_max: i32) -> Self {
        let mut u = Self::zeros(f.grid(), k_max);
        u.modes.insert(0, f);
        u
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }
    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn set(&mut self, k: i32, f: DiscField) -> Result<()> {
        self.check(k)?;
        if !f.grid().same_as(&self.grid) {
            return Err(AtrtError::GridMismatch("mode grid differs from fiber grid".into()));
        }
        self.modes.insert(k, f);
        Ok(())
    }

    pub fn with(mut self, k: i32, f: DiscField) -> Result<Self> {
        self.set(k, f)?;
        Ok(self)
    }

    /// Adds `f` into mode k.
    pub fn accumulate(&mut self, k: i32, f: &DiscField) -> Result<()> {
        self.check(k)?;
        let next = match self.modes.get(&k) {
            Some(g) => g.add(f),
            None => f.clone(),
        };
        self.modes.insert(k, next);
        Ok(())
    }

    fn check(&self, k: i32) -> Result<()> {
        if k.abs() > self.k_max {
            Err(AtrtError::HarmonicOutOfRange { k, k_max: self.k_max })
        } else {
            Ok(())
        }
    }

    /// Coefficient of e^{ikθ}.
    pub fn harmonic_project(&self, k: i32) -> Result<DiscField> {
        self.check(k)?;
        Ok(self.mode(k))
    }

    /// Coefficient of e^{ikθ} (zero if absent or out of range).
    pub fn mode(&self, k: i32) -> DiscField {
        self.modes
            .get(&k)
            .cloned()
            .unwrap_or_else(|| DiscField::zeros(&self.grid, &format!("mode {k}")))
    }

    pub fn has_mode(&self, k: i32) -> bool {
        self.modes.contains_key(&k)
    }

    pub fn stored_modes(&self) -> impl Iterator<Item = (&i32, &DiscField)> {
        self.modes.iter()
    }

    pub fn fiber_average(&self) -> DiscField {
        self.mode(0)
    }

    /// Largest |k| carrying a stored mode with nonzero norm.
    pub fn order(&self) -> i32 {
        self.modes
            .iter()
            .filter(|(_, f)| f.max_abs() > 0.0)
            .map(|(k, _)| k.abs())
            .max()
            .unwrap_or(0)
    }

    pub fn fiber_hilbert(&self, parity: Parity) -> FiberField {
        self.map_modes(|k, f| {
            if !parity.keeps(k as i64) || k == 0 {
                None
            } else {
                Some(f.scale(C64::new(0.0, -(k.signum() as f64))))
            }
        })
    }

    /// (Id + s·iH) with s = ±1: s = +1 keeps k ≥ 0 (doubling k > 0).
    pub fn holo_projector(&self, s: f64) -> FiberField {
        self.map_modes(|k, f| {
            let m = 1.0 + s * k.signum() as f64;
            if m == 0.0 {
                None
            } else if m == 1.0 {
                Some(f.clone())
            } else {
                Some(f.scale(C64::new(m, 0.0)))
            }
        })
    }

    fn map_modes<F: Fn(i32, &DiscField) -> Option<DiscField>>(&self, op: F) -> FiberField {
        let mut out = Self::zeros(&self.grid, self.k_max);
        for (&k, f) in &self.modes {
            if let Some(g) = op(k, f) {
                out.modes.insert(k, g);
            }
        }
        out
    }

    pub fn add(&self, other: &FiberField) -> FiberField {
        let mut out = self.clone();
        out.k_max = self.k_max.max(other.k_max);
        for (&k, f) in &other.modes {
            out.accumulate(k, f).expect("within range");
        }
        out
    }

    pub fn sub(&self, other: &FiberField) -> FiberField {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> FiberField {
        self.map_modes(|_, f| Some(f.scale(c)))
    }

    /// Complex conjugate: mode k of the result is the conjugate of mode -k.
    pub fn conj(&self) -> FiberField {
        let mut out = Self::zeros(&self.grid, self.k_max);
        for (&k, f) in &self.modes {
            out.modes.insert(-k, f.conj());
        }
        out
    }

    /// Multiply by a function of x only.
    pub fn mul_disc(&self, a: &DiscField) -> FiberField {
        self.map_modes(|_, f| Some(f.mul(a)))
    }

    pub fn eval(&self, z: C64, theta: f64) -> C64 {
        let e = C64::from_polar(1.0, theta);
        self.modes
            .iter()
            .map(|(&k, f)| f.eval(z) * e.powi(k))
            .sum()
    }

    /// ‖u‖² = 2π Σ_k ‖u_k‖²_M.
    pub fn parseval_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(1.0)
    }
    pub fn parseval_norm(&self) -> f64 {
        self.parseval_norm_sq().sqrt()
    }
    /// 2π(‖u₀‖² + Σ_{k≥1} κ^k (‖u_k‖² + ‖u_{-k}‖²)).
    pub fn weighted_norm_sq(&self, kappa: f64) -> f64 {
        2.0 * PI
            * self
                .modes
                .iter()
                .map(|(&k, f)| kappa.powi(k.abs()) * f.norm_sq())
                .sum::<f64>()
    }
    /// Same as parseval norm but only over nodes with ρ ≤ rho_max.
    pub fn masked_norm_sq(&self, rho_max: f64) -> f64 {
        2.0 * PI * self.modes.values().map(|f| f.masked_norm_sq(rho_max)).sum::<f64>()
    }
    /// Norm of the modes with k < 0.
    pub fn negative_norm_sq(&self) -> f64 {
        2.0 * PI * self.modes.range(..0).map(|(_, f)| f.norm_sq()).sum::<f64>()
    }
    /// The order-k piece f_k = f_{k,+} e^{ikθ} + f_{k,-} e^{-ikθ} as a fiber field.
    pub fn degree_part(&self, k: i32) -> FiberField {
        self.map_modes(|j, f| if j.abs() == k { Some(f.clone()) } else { None })
    }
    /// ‖f_k‖² for the order-k piece.
    pub fn degree_norm_sq(&self, k: i32) -> f64 {
        self.degree_part(k).parseval_norm_sq()
    }
    /// Copy keeping only modes with |k| ≤ m.
    pub fn truncate(&self, m: i32) -> FiberField {
        self.map_modes(|k, f| if k.abs() <= m { Some(f.clone()) } else { None })
    }
    pub fn with_k_max(mut self, k_max: i32) -> FiberField {
        self.k_max = k_max;
        self.modes.retain(|k, _| k.abs() <= k_max);
        self
    }
}

/// Samples of a function on SM over (ρ_i, β_j, θ_l), θ_l = 2πl/n_theta.
#[derive(Clone, Debug)]
pub struct SmSamples {
    grid: Arc<PolarGrid>,
    n_theta: usize,
    data: Vec<C64>,
}

impl SmSamples {
    /// Tabulate `f(x, θ)` at every grid node.
    pub fn from_fn<F>(grid: &Arc<PolarGrid>, n_theta: usize, f: F) -> Self
    where
        F: Fn(C64, f64) -> C64 + Sync,
    {
        let nb = grid.n_beta();
        let data: Vec<C64> = (0..grid.len() * n_theta)
            .into_par_iter()
            .map(|idx| {
                let node = idx / n_theta;
                let l = idx % n_theta;
                let z = grid.point(node / nb, node % nb);
                f(z, 2.0 * PI * l as f64 / n_theta as f64)
            })
            .collect();
        Self { grid: grid.clone(), n_theta, data }
    }

    pub fn from_fiber(u: &FiberField, n_theta: usize) -> Self {
        let grid = u.grid().clone();
        let mut data = vec![ZERO; grid.len() * n_theta];
        for (&k, f) in u.stored_modes() {
            let b = bin(k as i64, n_theta);
            for (node, v) in f.values().iter().enumerate() {
                data[node * n_theta + b] += v;
            }
        }
        fft_rows(&mut data, n_theta, true);
        Self { grid, n_theta, data }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn zip_with<F: Fn(C64, C64) -> C64 + Sync>(&self, other: &SmSamples, op: F) -> SmSamples {
        assert_eq!(self.data.len(), other.data.len());
        let data = self.data.par_iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect();
        Self { grid: self.grid.clone(), n_theta: self.n_theta, data }
    }

    pub fn map<F: Fn(C64) -> C64 + Sync>(&self, op: F) -> SmSamples {
        let data = self.data.par_iter().map(|&a| op(a)).collect();
        Self { grid: self.grid.clone(), n_theta: self.n_theta, data }
    }

    pub fn from_data(grid: &Arc<PolarGrid>, n_theta: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() * n_theta {
            return Err(AtrtError::GridMismatch(format!(
                "{} samples for {} nodes x {n_theta} directions",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), n_theta, data })
    }

    /// Multiplies angular mode k by `m(k)` (Nyquist mode indexed as −n/2).
    pub fn angular_multiplier<F: Fn(i64) -> C64 + Sync>(&self, m: F) -> SmSamples {
        let nt = self.n_theta;
        let mut data = self.data.clone();
        let s = 1.0 / nt as f64;
        let mult: Vec<C64> = (0..nt).map(|j| m(freq(j, nt)) * s).collect();
        fft_rows(&mut data, nt, false);
        data.par_chunks_mut(nt).for_each(|row| row.iter_mut().zip(&mult).for_each(|(v, c)| *v *= c));
        fft_rows(&mut data, nt, true);
        Self { grid: self.grid.clone(), n_theta: nt, data }
    }

    /// Fiber average at every grid node.
    pub fn average(&self) -> DiscField {
        let nt = self.n_theta as f64;
        let v = self.data.chunks(self.n_theta).map(|r| r.iter().sum::<C64>() / nt).collect();
        DiscField::from_values(&self.grid, "average", v).expect("finite")
    }

    /// Angular Fourier projection onto |k| ≤ k_max.
    pub fn to_fiber(&self, k_max: i32) -> FiberField {
        let nt = self.n_theta;
        let mut spec = self.data.clone();
        fft_rows(&mut spec, nt, false);
        let s = 1.0 / nt as f64;
        let kk = k_max.min(nt as i32 / 2 - 1);
        let mut out = FiberField::zeros(&self.grid, k_max);
        for k in -kk..=kk {
            let b = bin(k as i64, nt);
            let vals: Vec<C64> = spec.chunks(nt).map(|row| row[b] * s).collect();
            if vals.iter().any(|v| v.norm() > 0.0) {
                out.set(k, DiscField::from_values(&self.grid, &format!("mode {k}"), vals).expect("finite"))
                    .expect("range");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<PolarGrid> {
        PolarGrid::new(16, 16).unwrap()
    }

    #[test]
    fn project_returns_single_mode() {
        let g = grid();
        let f = DiscField::analytic(&g, "f", |z| z * 2.0);
        let u = FiberField::zeros(&g, 4).with(2, f.clone()).unwrap();
        assert!((u.harmonic_project(2).unwrap().values()[5] - f.values()[5]).norm() < 1e-15);
        assert!(u.harmonic_project(1).unwrap().max_abs() == 0.0);
        assert!(u.harmonic_project(5).is_err());
    }

    #[test]
    fn x_cos_theta_projects_to_half_x() {
        let g = grid();
        let s = SmSamples::from_fn(&g, 32, |z, th| C64::new(z.re * th.cos(), 0.0));
        let u = s.to_fiber(4);
        for k in [-1, 1] {
            let m = u.harmonic_project(k).unwrap();
            for (v, z) in m.values().iter().zip(g.points()) {
                assert!((v - z.re / 2.0).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hilbert_squared_removes_mean() {
        let g = grid();
        let mut u = FiberField::zeros(&g, 3);
        for k in -3..=3 {
            u.set(k, DiscField::constant(&g, "c", C64::new(k as f64 + 0.5, 1.0))).unwrap();
        }
        let hh = u.fiber_hilbert(Parity::All).fiber_hilbert(Parity::All);
        let expect = u.sub(&u.degree_part(0)).scale(C64::new(-1.0, 0.0));
        assert!(hh.sub(&expect).parseval_norm() < 1e-13);
    }

    #[test]
    fn parseval_norm_of_unit_first_harmonic() {
        let g = grid();
        let u = FiberField::zeros(&g, 2).with(1, DiscField::constant(&g, "1", C64::new(1.0, 0.0))).unwrap();
        assert!((u.parseval_norm() - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn samples_round_trip() {
        let g = grid();
        let u = FiberField::zeros(&g, 3)
            .with(-2, DiscField::analytic(&g, "a", |z| z.conj()))
            .unwrap()
            .with(3, DiscField::analytic(&g, "b", |z| z * z))
            .unwrap();
        let back = SmSamples::from_fiber(&u, 16).to_fiber(3);
        assert!(back.sub(&u).parseval_norm() < 1e-13);
    }
}
