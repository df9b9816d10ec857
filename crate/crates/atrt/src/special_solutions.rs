//! Closed-form kernels and special transport solutions: Z_k, W_k, the kernel 𝒢, invariant
//! distributions W_f, the J_{k,p} integrals, holomorphic integrating factors, the primitive
//! for f₀ + X⊥f_s and the holomorphization operators.

use crate::boundary_ops::{a_extend, a_restrict, op_p_dagger, op_p_star, Part, Sign};
use crate::complex_calculus::{wirtinger, Wirtinger};
use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryField, BoundaryGrid, DiscField, FiberField, PolarGrid, SmSamples, C64};
use crate::geometry::{footpoint_unchecked, FanBeamPoint, FlowExtension};
use crate::transport::{xray_i0, xray_perp, Discretization, ForwardConfig};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn sign_pow(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Z_k(z) = √((k+1)/2π²) z^k, unit norm in L²(SM).
pub fn z_k(k: u32, z: C64) -> C64 {
    z.powu(k) * ((k as f64 + 1.0) / (2.0 * PI * PI)).sqrt()
}

/// W_k(β,α) = (−1)^k √(k+1)/(2π√2) e^{ikβ}(e^{i(2k+1)α} + (−1)^k e^{−iα}).
pub fn w_k(k: u32, beta: f64, alpha: f64) -> C64 {
    let s = sign_pow(k);
    let c = s * (k as f64 + 1.0).sqrt() / (2.0 * PI * SQRT_2);
    let kf = k as f64;
    C64::from_polar(c, kf * beta) * (C64::from_polar(1.0, (2.0 * kf + 1.0) * alpha) + C64::from_polar(s, -alpha))
}

/// u'_{k,k}/cos α = (√2/π) e^{ikβ} (−1)^k Σ_{p=0}^k (−1)^p e^{2ipα}, valid on all of ∂SM.
pub fn ukk_over_cos(k: u32, beta: f64, alpha: f64) -> C64 {
    let step = -C64::from_polar(1.0, 2.0 * alpha);
    let mut acc = ZERO;
    let mut term = C64::new(1.0, 0.0);
    for _ in 0..=k {
        acc += term;
        term *= step;
    }
    C64::from_polar(sign_pow(k) * SQRT_2 / PI, k as f64 * beta) * acc
}

/// W_k / cos α through the finite sum, never by division.
pub fn w_k_over_cos(k: u32, beta: f64, alpha: f64) -> C64 {
    ukk_over_cos(k, beta, alpha) * (sign_pow(k) * (k as f64 + 1.0).sqrt() / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Zk,
    Wk,
    UkkOverCos,
}

#[derive(Clone, Copy, Debug)]
pub enum BasisPoint {
    Disc(C64),
    Boundary(FanBeamPoint),
}

pub fn basis_eval(kind: BasisKind, k: u32, point: BasisPoint) -> Result<C64> {
    match (kind, point) {
        (BasisKind::Zk, BasisPoint::Disc(z)) => {
            if z.norm() > 1.0 + 1e-12 {
                return Err(AtrtError::OutsideDisc(z.norm()));
            }
            Ok(z_k(k, z))
        }
        (BasisKind::Wk, BasisPoint::Boundary(p)) => Ok(w_k(k, p.beta, p.alpha)),
        (BasisKind::UkkOverCos, BasisPoint::Boundary(p)) => Ok(ukk_over_cos(k, p.beta, p.alpha)),
        (kind, _) => Err(AtrtError::InvalidArgument(format!("{kind:?} evaluated at the wrong kind of point"))),
    }
}

/// W_k sampled on ∂₊ (zero on ∂₋).
pub fn w_k_field(k: u32, grid: BoundaryGrid) -> BoundaryField {
    BoundaryField::from_fn_plus(grid, move |b, a| w_k(k, b, a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMode {
    Closed,
    /// Partial sum with the given number of terms.
    Series(usize),
    /// ½(Id + 𝒮_A*) applied to e^{iα}/(2π²(1 − z e^{−iβ})²).
    Separable,
}

/// 𝒢(z; β, α) = Σ_k conj(W_k)(β,α) Z_k(z).
pub fn green_kernel(z: C64, p: FanBeamPoint, mode: GreenMode) -> Result<C64> {
    if z.norm() >= 1.0 - 1e-12 {
        return Err(AtrtError::OutsideDisc(z.norm()));
    }
    Ok(green_unchecked(z, p.beta, p.alpha, mode))
}

fn green_unchecked(z: C64, beta: f64, alpha: f64, mode: GreenMode) -> C64 {
    let c = 1.0 / (4.0 * PI * PI);
    match mode {
        GreenMode::Closed => {
            let d1 = C64::new(1.0, 0.0) + z * C64::from_polar(1.0, -(beta + 2.0 * alpha));
            let d2 = C64::new(1.0, 0.0) - z * C64::from_polar(1.0, -beta);
            (C64::from_polar(1.0, -alpha) / (d1 * d1) + C64::from_polar(1.0, alpha) / (d2 * d2)) * c
        }
        GreenMode::Series(n) => {
            let zeta = -z * C64::from_polar(1.0, -beta);
            let mut pow = C64::new(1.0, 0.0);
            let mut acc = ZERO;
            for k in 0..n {
                let kf = k as f64;
                let ang = C64::from_polar(1.0, -(2.0 * kf + 1.0) * alpha) + C64::from_polar(sign_pow(k as u32), alpha);
                acc += pow * ang * (kf + 1.0);
                pow *= zeta;
            }
            acc * c
        }
        GreenMode::Separable => {
            let half = |b: f64, a: f64| {
                let d = C64::new(1.0, 0.0) - z * C64::from_polar(1.0, -b);
                C64::from_polar(1.0, a) / (d * d * (2.0 * PI * PI))
            };
            (half(beta, alpha) + half(beta + PI + 2.0 * alpha, -alpha)) * 0.5
        }
    }
}

/// W_f on ∂₊ with its coefficients ⟨f, Z_k⟩_SM and the closed form of W_f / cos α on ∂SM.
#[derive(Clone, Debug)]
pub struct InvariantDistribution {
    pub coeffs: Vec<C64>,
    pub w: BoundaryField,
    pub w_over_cos: BoundaryField,
}

fn check_holomorphic(f: &DiscField) -> Result<()> {
    let scale = f.norm();
    if scale == 0.0 {
        return Ok(());
    }
    let defect = wirtinger(f, Wirtinger::Dbar).masked_norm_sq(0.95).sqrt() / scale;
    if defect > 1e-6 {
        return Err(AtrtError::InvalidArgument(format!("input is not holomorphic: ‖∂̄f‖/‖f‖ = {defect:.2e}")));
    }
    Ok(())
}

/// W_f = Σ_{k ≤ k_max} ⟨f, Z_k⟩_SM W_k for holomorphic f.
pub fn invariant_from_function(f: &DiscField, grid: BoundaryGrid, k_max: u32) -> Result<InvariantDistribution> {
    check_holomorphic(f)?;
    let pg = f.grid().clone();
    let coeffs: Vec<C64> = (0..=k_max)
        .map(|k| {
            let zk = DiscField::analytic(&pg, "Z", move |z| z_k(k, z));
            f.inner(&zk) * (2.0 * PI)
        })
        .collect();
    let cs = coeffs.clone();
    let w = BoundaryField::from_fn_plus(grid, |b, a| cs.iter().enumerate().map(|(k, c)| c * w_k(k as u32, b, a)).sum());
    let w_over_cos =
        BoundaryField::from_fn(grid, |b, a| cs.iter().enumerate().map(|(k, c)| c * w_k_over_cos(k as u32, b, a)).sum());
    Ok(InvariantDistribution { coeffs, w, w_over_cos })
}

/// W_f(β,α) = 2π ∫_M f conj(𝒢(x; β,α)) d²x. The kernel is only conditionally integrable at the
/// boundary, so each ring's angular integral is taken exactly (Parseval against the angular modes of
/// f and the Taylor coefficients of 𝒢 in z̄) and the radial integral by the grid rule.
pub fn invariant_from_function_integral(f: &DiscField, grid: BoundaryGrid) -> Result<BoundaryField> {
    check_holomorphic(f)?;
    let pg = f.grid();
    let nb = pg.n_beta();
    let modes = f.modes();
    let kmax = nb.div_ceil(2);
    // ring_k[k] = 2π Σ_i (radial weight)_i ρ_i^k f̂_k(ρ_i)
    let ring_k: Vec<C64> = (0..kmax)
        .map(|k| {
            (0..pg.n_rho())
                .map(|i| {
                    let rw = pg.weight(i, 0) * nb as f64 / (2.0 * PI);
                    modes[i * nb + k] * pg.rho()[i].powi(k as i32) * rw
                })
                .sum::<C64>()
                * (2.0 * PI)
        })
        .collect();
    let c = 1.0 / (4.0 * PI * PI);
    Ok(BoundaryField::from_fn_plus(grid, |b, a| {
        let mut acc = ZERO;
        for (k, r) in ring_k.iter().enumerate() {
            let kf = k as f64;
            let kernel = C64::from_polar(sign_pow(k as u32) * (kf + 1.0) * c, kf * b)
                * (C64::from_polar(1.0, (2.0 * kf + 1.0) * a) + C64::from_polar(sign_pow(k as u32), -a));
            acc += kernel * r;
        }
        acc * (2.0 * PI)
    }))
}

/// I₀*W_f = ((W_f / cos α)_ψ)₀ from the closed form.
pub fn adjoint_of_invariant(inv: &InvariantDistribution, grid: &Arc<PolarGrid>, n_theta: usize) -> DiscField {
    FlowExtension::from_full(inv.w_over_cos.clone()).sample(grid, n_theta).average()
}

/// J_{k,p}(x) = (1/2π)∫ (e^{ikβ} e^{2ipα})_ψ(x,θ) dθ by the trapezoidal rule on `n_theta` nodes.
pub fn j_kp_oracle(k: u32, p: u32, x: C64, n_theta: usize) -> Result<C64> {
    if p > k {
        return Err(AtrtError::InvalidArgument(format!("J_{{k,p}} needs p ≤ k, got k={k}, p={p}")));
    }
    if x.norm() > 1.0 {
        return Err(AtrtError::OutsideDisc(x.norm()));
    }
    let s: C64 = (0..n_theta)
        .map(|l| {
            let fp = footpoint_unchecked(x, 2.0 * PI * l as f64 / n_theta as f64);
            C64::from_polar(1.0, k as f64 * fp.beta + 2.0 * p as f64 * fp.alpha)
        })
        .sum();
    Ok(s / n_theta as f64)
}

/// Closed form of J_{k,p}: ½(1 + δ_{k0}) z^k at p = 0, (−1)^k times that at p = k, zero otherwise.
pub fn j_kp_closed(k: u32, p: u32, x: C64) -> C64 {
    let base = x.powu(k) * if k == 0 { 1.0 } else { 0.5 };
    if p == 0 {
        base
    } else if p == k {
        base * sign_pow(k)
    } else {
        ZERO
    }
}

/// A fiberwise holomorphic, odd solution of Xw = −a with its boundary values.
#[derive(Clone, Debug)]
pub struct IntegratingFactor {
    /// Angular samples of w on the SM grid.
    pub samples: SmSamples,
    /// Harmonic projection of `samples`.
    pub w: FiberField,
    /// ρ = w|∂₊SM (zero on ∂₋).
    pub rho: BoundaryField,
    /// w|∂SM.
    pub boundary: BoundaryField,
    pub conjugate: bool,
    pub a: DiscField,
    /// P₋*I₀a for the attenuation actually used (ā in the conjugate variant).
    filtered: BoundaryField,
}

/// w_a = −(i/4)(Id + iH)(P₋*I₀a)_ψ, ρ_a = ½I₀a − (i/4)P₋*I₀a. The conjugate variant returns conj(w_ā).
pub fn hif_build(a: &DiscField, conjugate: bool, disc: &Discretization) -> IntegratingFactor {
    let att = if conjugate { a.conj() } else { a.clone() };
    let zero = DiscField::zeros(a.grid(), "0");
    let i0a = xray_i0(&att, &zero, &disc.forward);
    let filtered = op_p_star(&i0a, Part::Minus);
    let q = C64::new(0.0, -0.25);
    let rho = i0a.scale(C64::new(0.5, 0.0)).add(&filtered.scale(q));
    let boundary = a_extend(&i0a, Sign::Minus).scale(C64::new(0.5, 0.0)).add(&a_extend(&filtered, Sign::Plus).scale(q));
    let samples = FlowExtension::new(&filtered)
        .sample(&disc.pgrid, disc.n_theta)
        .angular_multiplier(odd_holo_multiplier)
        .map(|v| v * q);
    let (samples, rho, boundary) = if conjugate {
        (samples.map(|v| v.conj()), rho.conj(), boundary.conj())
    } else {
        (samples, rho, boundary)
    };
    let w = samples.to_fiber(disc.k_max);
    IntegratingFactor { samples, w, rho, boundary, conjugate, a: a.clone(), filtered }
}

/// (Id + iH)(h_ψ) on the SM grid.
fn holo_samples(h: &BoundaryField, grid: &Arc<PolarGrid>, n_theta: usize) -> SmSamples {
    FlowExtension::new(h).sample(grid, n_theta).angular_multiplier(holo_multiplier)
}

fn holo_multiplier(k: i64) -> C64 {
    C64::new(1.0 + k.signum() as f64, 0.0)
}

/// (Id + iH) restricted to odd modes: flow extensions of 𝒱₋ data are fiberwise odd.
fn odd_holo_multiplier(k: i64) -> C64 {
    if k % 2 == 0 {
        ZERO
    } else {
        holo_multiplier(k)
    }
}

impl IntegratingFactor {
    /// e^{s·w} on the SM grid.
    pub fn exp_samples(&self, s: f64) -> SmSamples {
        self.samples.map(|v| (v * s).exp())
    }

    /// e^{s·ρ} on ∂₊ (zero on ∂₋).
    pub fn exp_rho(&self, s: f64) -> BoundaryField {
        let g = self.rho.grid();
        BoundaryField::from_values(
            g,
            self.rho
                .values()
                .iter()
                .enumerate()
                .map(|(idx, v)| if g.is_plus(idx % g.n_alpha) { (v * s).exp() } else { ZERO })
                .collect(),
        )
        .expect("same grid")
    }

    /// Pointwise w(x, θ) from `n_theta` angular samples of the flow extension.
    pub fn eval(&self, x: C64, theta: f64) -> C64 {
        let nt = self.samples.n_theta();
        let fe = FlowExtension::new(&self.filtered);
        let mut row: Vec<C64> = (0..nt).map(|l| fe.eval(x, 2.0 * PI * l as f64 / nt as f64)).collect();
        crate::fields::quadrature::fft_rows(&mut row, nt, false);
        let mut acc = ZERO;
        for (j, c) in row.iter().enumerate() {
            let k = crate::fields::quadrature::freq(j, nt);
            acc += c * odd_holo_multiplier(k) * C64::from_polar(1.0, k as f64 * theta);
        }
        let w = acc / nt as f64 * C64::new(0.0, -0.25);
        if self.conjugate {
            w.conj()
        } else {
            w
        }
    }

    /// |w(x + Lv) − w(x) + ∫_0^L a| along `n` seeded random chord segments (integral form of Xw + a = 0).
    pub fn chord_residual(&self, n: usize, seed: u64, quad: &crate::geometry::ChordQuadrature) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let segs: Vec<(C64, f64, f64)> = (0..n)
            .map(|_| {
                let r = 0.8 * rng.random::<f64>().sqrt();
                let x = C64::from_polar(r, rng.random::<f64>() * 2.0 * PI);
                let th = rng.random::<f64>() * 2.0 * PI;
                let tau = crate::geometry::exit_time_unchecked(x, th);
                (x, th, 0.5 * tau)
            })
            .collect();
        let sa = self.a.sampler();
        segs.par_iter()
            .map(|&(x, th, len)| {
                let v = C64::from_polar(1.0, th);
                let ch = quad.segment(FanBeamPoint::new(0.0, 0.0), len);
                let int_a: C64 = ch.t.iter().zip(&ch.w).map(|(t, w)| sa.eval(x + v * t) * w).sum();
                (self.eval(x + v * len, th) - self.eval(x, th) + int_a).norm()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// u = −i(Id + iH)(P†I(f₀ + X⊥f_s))_ψ: Xu = −f₀ − X⊥f_s and u₀ = −i f_s.
pub fn special_primitive(f0: &DiscField, fs: &DiscField, disc: &Discretization) -> FiberField {
    let zero = DiscField::zeros(f0.grid(), "0");
    let data = xray_i0(f0, &zero, &disc.forward).add(&xray_perp(fs, &zero, &disc.forward));
    special_primitive_from_data(&data, &disc.pgrid, disc.n_theta, disc.k_max)
}

/// The primitive from unattenuated data I(f₀ + X⊥f_s).
pub fn special_primitive_from_data(data: &BoundaryField, grid: &Arc<PolarGrid>, n_theta: usize, k_max: i32) -> FiberField {
    let filtered = op_p_dagger(data, Part::All);
    holo_samples(&filtered, grid, n_theta).map(|v| v * -I).to_fiber(k_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// B⃗h = ½[(Id − iH)h + i(Id + iH)A₊P†A₋*(Id − iH)h] restricted to ∂₊; B⃖h = conj(B⃗ conj h).
pub fn holomorphize(trace: &BoundaryField, direction: Direction) -> BoundaryField {
    match direction {
        Direction::Forward => {
            let anti = trace.alpha_multiplier(|n| C64::new(1.0 - n.signum() as f64, 0.0));
            let inner = a_extend(&op_p_dagger(&a_restrict(&anti, Sign::Minus), Part::All), Sign::Plus);
            let holo = inner.alpha_multiplier(|n| C64::new(0.0, 1.0 + n.signum() as f64));
            anti.add(&holo).scale(C64::new(0.5, 0.0)).restrict_plus()
        }
        Direction::Backward => holomorphize(&trace.conj(), Direction::Forward).conj(),
    }
}

/// Forward configuration helper for tests and callers that only need a torus grid.
pub fn forward_only(grid: BoundaryGrid) -> ForwardConfig {
    ForwardConfig::new(grid, crate::geometry::ChordQuadrature::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_ops::{BoundaryBasisIndex, Family};

    #[test]
    fn z0_value_and_wk_match_uprime_family() {
        assert!((z_k(0, C64::new(0.3, 0.1)).re - 1.0 / (PI * SQRT_2)).abs() < 1e-15);
        assert!((1.0 / (PI * SQRT_2) - 0.225079).abs() < 1e-6);
        for k in 0..5u32 {
            let u = BoundaryBasisIndex::new(Family::UPrime, k as i64, k as i64);
            for &(b, a) in &[(0.3, 0.2), (2.0, -1.1), (5.0, 1.4)] {
                let expect = u.eval(b, a) * (sign_pow(k) * (k as f64 + 1.0).sqrt() / 2.0);
                assert!((w_k(k, b, a) - expect).norm() < 1e-14);
                assert!((ukk_over_cos(k, b, a) * a.cos() - u.eval(b, a)).norm() < 1e-14);
            }
        }
        assert!((w_k(0, 1.0, 0.4) - C64::new(0.4f64.cos() / (PI * SQRT_2), 0.0)).norm() < 1e-15);
        assert!(ukk_over_cos(1, 0.7, 0.0).norm() < 1e-15);
        assert!(basis_eval(BasisKind::Zk, 1, BasisPoint::Boundary(FanBeamPoint::new(0.0, 0.0))).is_err());
    }

    #[test]
    fn green_kernel_paths_agree() {
        let p = FanBeamPoint::new(0.4, 0.3);
        let g0 = green_kernel(C64::new(0.0, 0.0), p, GreenMode::Closed).unwrap();
        assert!((g0 - C64::new(0.3f64.cos() / (2.0 * PI * PI), 0.0)).norm() < 1e-15);
        let z = C64::from_polar(0.5, PI / 4.0);
        let c = green_kernel(z, p, GreenMode::Closed).unwrap();
        let s = green_kernel(z, p, GreenMode::Series(200)).unwrap();
        let sep = green_kernel(z, p, GreenMode::Separable).unwrap();
        assert!((c - s).norm() < 1e-10);
        assert!((c - sep).norm() < 1e-14);
        assert!(green_kernel(C64::new(1.0, 0.0), p, GreenMode::Closed).is_err());
    }

    #[test]
    fn j_kp_values() {
        let x = C64::new(0.4, 0.2);
        assert!((j_kp_oracle(0, 0, x, 2048).unwrap() - 1.0).norm() < 1e-12);
        assert!(j_kp_oracle(2, 1, x, 2048).unwrap().norm() < 1e-12);
        assert!((j_kp_oracle(3, 3, x, 2048).unwrap() + x.powu(3) * 0.5).norm() < 1e-12);
        for k in 1..5 {
            for p in 0..=k {
                assert!((j_kp_oracle(k, p, x, 2048).unwrap() - j_kp_closed(k, p, x)).norm() < 1e-12);
            }
        }
        assert!(j_kp_oracle(1, 2, x, 16).is_err());
    }

    #[test]
    fn invariant_of_z3_is_w3_and_representations_agree() {
        let pg = PolarGrid::new(12, 16).unwrap();
        let g = BoundaryGrid::new(32, 32).unwrap();
        let f = DiscField::analytic(&pg, "Z3", |z| z_k(3, z));
        let inv = invariant_from_function(&f, g, 8).unwrap();
        assert!(inv.w.sub(&w_k_field(3, g)).max_abs() < 1e-12);
        let pg2 = PolarGrid::new(40, 64).unwrap();
        let f2 = DiscField::analytic(&pg2, "Z3", |z| z_k(3, z));
        let integral = invariant_from_function_integral(&f2, g).unwrap();
        assert!(integral.sub(&inv.w).max_abs() < 1e-8, "{}", integral.sub(&inv.w).max_abs());
        let zero = invariant_from_function(&DiscField::zeros(&pg, "0"), g, 4).unwrap();
        assert_eq!(zero.w.max_abs(), 0.0);
        let bad = DiscField::analytic(&pg, "zbar", |z| z.conj());
        assert!(invariant_from_function(&bad, g, 4).is_err());
    }

    #[test]
    fn adjoint_of_wk_is_zk() {
        let pg = PolarGrid::new(12, 16).unwrap();
        let g = BoundaryGrid::new(128, 128).unwrap();
        for k in [0u32, 2, 5] {
            let f = DiscField::analytic(&pg, "Z", move |z| z_k(k, z));
            let inv = invariant_from_function(&f, g, 8).unwrap();
            let back = adjoint_of_invariant(&inv, &pg, 64);
            assert!(back.rel_error(&f, 0.9) < 1e-5, "k={k}: {}", back.rel_error(&f, 0.9));
        }
    }

    fn small_disc() -> Discretization {
        Discretization::new(
            PolarGrid::new(12, 16).unwrap(),
            ForwardConfig::new(BoundaryGrid::new(64, 64).unwrap(), crate::geometry::ChordQuadrature::new(0.05, 4)),
            32,
            8,
        )
    }

    #[test]
    fn integrating_factor_for_constant_attenuation() {
        let d = small_disc();
        let c = C64::new(0.5, 0.2);
        let a = DiscField::constant(&d.pgrid, "a", c);
        let hif = hif_build(&a, false, &d);
        let rho_exact = BoundaryField::from_fn_plus(d.bgrid(), |_, al| c * C64::from_polar(1.0, al));
        assert!(hif.rho.sub(&rho_exact).max_abs() < 1e-8, "{}", hif.rho.sub(&rho_exact).max_abs());
        let w1 = hif.w.mode(1);
        let exact = DiscField::analytic(&d.pgrid, "w", move |z| -c * z.conj());
        assert!(w1.sub(&exact).to_grid_only().max_abs() < 1e-6, "{}", w1.sub(&exact).to_grid_only().max_abs());
        let rest: f64 = hif.w.stored_modes().filter(|(k, _)| **k != 1).map(|(_, f)| f.max_abs()).fold(0.0, f64::max);
        assert!(rest < 1e-6);
        let zero = hif_build(&DiscField::zeros(&d.pgrid, "0"), false, &d);
        assert_eq!(zero.rho.max_abs(), 0.0);
        assert_eq!(zero.samples.data().iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
        // conjugate variant: conj(w_ā) = −c z e^{−iθ}
        let hc = hif_build(&a, true, &d);
        let exact = DiscField::analytic(&d.pgrid, "w", move |z| -c * z);
        assert!(hc.w.mode(-1).sub(&exact).to_grid_only().max_abs() < 1e-6);
        assert!((hc.eval(C64::new(0.2, 0.1), 0.7) - (-c * C64::new(0.2, 0.1) * C64::from_polar(1.0, -0.7))).norm() < 1e-6);
    }

    #[test]
    fn integrating_factor_solves_transport_for_gaussian() {
        let d = small_disc();
        let a = DiscField::analytic(&d.pgrid, "a", |z| C64::new(0.6, 0.3) * (-(z - 0.2).norm_sqr() * 3.0).exp());
        let hif = hif_build(&a, false, &d);
        let r = hif.chord_residual(20, 3, &crate::geometry::ChordQuadrature::new(0.02, 6));
        assert!(r < 1e-3, "{r}");
        let neg: f64 = hif.w.stored_modes().filter(|(k, _)| **k < 0).map(|(_, f)| f.max_abs()).fold(0.0, f64::max);
        assert!(neg < 1e-12);
        let even: f64 = hif.w.stored_modes().filter(|(k, _)| **k % 2 == 0).map(|(_, f)| f.max_abs()).fold(0.0, f64::max);
        assert!(even < 1e-8, "{even}");
    }

    #[test]
    fn primitive_average_is_minus_i_fs() {
        let d = small_disc();
        let zero = DiscField::zeros(&d.pgrid, "0");
        assert_eq!(special_primitive(&zero, &zero, &d).parseval_norm(), 0.0);
        let fs = DiscField::analytic(&d.pgrid, "fs", |z| C64::new(1.0 - z.norm_sqr(), 0.0));
        let u = special_primitive(&zero, &fs, &d);
        let err = u.mode(0).sub(&fs.scale(-I)).masked_norm_sq(0.9).sqrt() / fs.masked_norm_sq(0.9).sqrt();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn backward_holomorphization_is_conjugate_of_forward_on_real_traces() {
        let g = BoundaryGrid::new(32, 32).unwrap();
        let h = BoundaryField::from_fn(g, |b, a| C64::new((b + 0.3 * a).cos() + (2.0 * a).sin(), 0.0));
        let f = holomorphize(&h, Direction::Forward);
        let b = holomorphize(&h, Direction::Backward);
        assert!(b.sub(&f.conj()).max_abs() < 1e-14);
    }
}
