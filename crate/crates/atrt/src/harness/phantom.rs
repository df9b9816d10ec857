//! Analytic test fields and attenuations.

use crate::error::{AtrtError, Result};
use crate::fields::{DiscField, FiberField, PolarGrid, C64};
use crate::gauge::GaugeRepresentative;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum PhantomKind {
    Zero,
    /// amp·exp(−|z − center|²/(2σ²)) placed in angular mode m.
    GaussianBump { center: C64, sigma: f64, amp: C64 },
    /// e^{imθ} z^k.
    PolyZk { k: u32 },
    /// R_n^{|l|}(ρ) e^{ilφ} placed in angular mode m.
    Zernike { n: u32, l: i32 },
    /// Seeded low-degree polynomials in every mode |p| ≤ m.
    TensorMix { seed: u64 },
    /// A gauge representative (g₀ bump, g_s vanishing bump, polynomial g_k) built directly.
    GaugeSynthetic { seed: u64 },
}

impl PhantomKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::Zero => "zero",
            PhantomKind::GaussianBump { .. } => "gaussian_bump",
            PhantomKind::PolyZk { .. } => "poly_zk",
            PhantomKind::Zernike { .. } => "zernike",
            PhantomKind::TensorMix { .. } => "tensor_mix",
            PhantomKind::GaugeSynthetic { .. } => "gauge_synthetic",
        }
    }
}

/// amp·exp(−|z − center|²/(2σ²)); σ = 0 gives the constant amp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttenuationSpec {
    pub amp: C64,
    pub center: C64,
    pub sigma: f64,
}

impl AttenuationSpec {
    pub fn zero() -> Self {
        Self { amp: C64::new(0.0, 0.0), center: C64::new(0.0, 0.0), sigma: 0.0 }
    }
    pub fn constant(c: C64) -> Self {
        Self { amp: c, center: C64::new(0.0, 0.0), sigma: 0.0 }
    }
    pub fn field(&self, grid: &Arc<PolarGrid>) -> DiscField {
        let s = *self;
        if s.amp == C64::new(0.0, 0.0) {
            return DiscField::zeros(grid, "a");
        }
        if s.sigma <= 0.0 {
            return DiscField::constant(grid, "a", s.amp);
        }
        DiscField::analytic(grid, "a", move |z| s.amp * (-(z - s.center).norm_sqr() / (2.0 * s.sigma * s.sigma)).exp())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub m: i32,
    pub attenuation: AttenuationSpec,
}

#[derive(Clone, Debug)]
pub struct Phantom {
    pub f: FiberField,
    pub a: DiscField,
    /// Known gauge representative when the phantom was built as one.
    pub truth: Option<GaugeRepresentative>,
}

fn bump(grid: &Arc<PolarGrid>, name: &str, center: C64, sigma: f64, amp: C64) -> DiscField {
    DiscField::analytic(grid, name, move |z| amp * (-(z - center).norm_sqr() / (2.0 * sigma * sigma)).exp())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Zernike radial polynomial R_n^l, n − l even and ≥ 0.
pub fn zernike_radial(n: u32, l: u32, rho: f64) -> f64 {
    let half = (n - l) / 2;
    (0..=half)
        .map(|s| {
            let c = factorial(n - s) / (factorial(s) * factorial((n + l) / 2 - s) * factorial(half - s));
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            sign * c * rho.powi((n - 2 * s) as i32)
        })
        .sum()
}

fn unit(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Σ_{a+b≤2} c_{ab} z^a z̄^b with seeded coefficients.
fn random_poly(grid: &Arc<PolarGrid>, name: &str, rng: &mut ChaCha8Rng, scale: f64) -> DiscField {
    let mut terms = Vec::new();
    for a in 0..=2i32 {
        for b in 0..=(2 - a) {
            terms.push((a, b, unit(rng) * scale / (1.0 + (a + b) as f64)));
        }
    }
    DiscField::analytic(grid, name, move |z| terms.iter().map(|&(a, b, c)| c * z.powi(a) * z.conj().powi(b)).sum())
}

/// c₀ + c₁w + c₂w² with w = z (holomorphic) or z̄.
fn random_holo(grid: &Arc<PolarGrid>, name: &str, rng: &mut ChaCha8Rng, anti: bool) -> DiscField {
    let c: Vec<C64> = (0..3).map(|j| unit(rng) * 0.6 / (1.0 + j as f64)).collect();
    DiscField::analytic(grid, name, move |z| {
        let w = if anti { z.conj() } else { z };
        c[0] + w * (c[1] + w * c[2])
    })
}

/// The synthetic representative of order m used by the full-pipeline checks.
pub fn gauge_synthetic(grid: &Arc<PolarGrid>, m: i32, seed: u64) -> GaugeRepresentative {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0 = bump(grid, "g0", C64::new(0.2, 0.1), 0.3, C64::new(1.0, 0.3));
    let sb = bump(grid, "b", C64::new(-0.2, 0.15), 0.35, C64::new(0.8, -0.2));
    let gs = DiscField::analytic(grid, "gs", move |z| {
        let s = 1.0 - z.norm_sqr();
        s * s * sb.eval(z)
    });
    let gk = (1..=m)
        .map(|k| {
            (random_holo(grid, &format!("g{k}+"), &mut rng, false), random_holo(grid, &format!("g{k}-"), &mut rng, true))
        })
        .collect();
    GaugeRepresentative { g0, gs, gk, m }
}

pub fn phantom_make(spec: &PhantomSpec, grid: &Arc<PolarGrid>) -> Result<Phantom> {
    let m = spec.m;
    if m < 0 {
        return Err(AtrtError::Config(format!("phantom order must be ≥ 0, got {m}")));
    }
    let a = spec.attenuation.field(grid);
    let single = |f: DiscField| FiberField::zeros(grid, m.max(1)).with(m, f);
    let (f, truth) = match &spec.kind {
        PhantomKind::Zero => (FiberField::zeros(grid, m.max(1)), None),
        PhantomKind::GaussianBump { center, sigma, amp } => {
            if *sigma <= 0.0 {
                return Err(AtrtError::Config("gaussian_bump needs sigma > 0".into()));
            }
            (single(bump(grid, "bump", *center, *sigma, *amp))?, None)
        }
        PhantomKind::PolyZk { k } => {
            let k = *k as i32;
            (single(DiscField::analytic(grid, "zk", move |z| z.powi(k)))?, None)
        }
        PhantomKind::Zernike { n, l } => {
            let (n, l) = (*n, *l);
            if l.unsigned_abs() > n || (n - l.unsigned_abs()) % 2 != 0 {
                return Err(AtrtError::Config(format!("zernike needs |l| ≤ n with n − |l| even, got n={n}, l={l}")));
            }
            let f = DiscField::analytic(grid, "zernike", move |z| {
                C64::from_polar(zernike_radial(n, l.unsigned_abs(), z.norm()), l as f64 * z.arg())
            });
            (single(f)?, None)
        }
        PhantomKind::TensorMix { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut f = FiberField::zeros(grid, m.max(1));
            for p in -m..=m {
                let scale = 1.0 / (1.0 + p.abs() as f64);
                f.set(p, random_poly(grid, &format!("f{p}"), &mut rng, scale))?;
            }
            (f, None)
        }
        PhantomKind::GaugeSynthetic { seed } => {
            let rep = gauge_synthetic(grid, m, *seed);
            (rep.reassemble(), Some(rep))
        }
    };
    Ok(Phantom { f, a, truth })
}
