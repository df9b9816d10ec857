//! Inversion of the attenuated transform onto the gauge representative: residual peeling from the
//! top degree down, bulk recovery of (g₀, g_s), unattenuated filtered backprojection and the
//! Doppler specialization.

use crate::boundary_ops::{a_extend, op_p_dagger, Part, Sign};
use crate::complex_calculus::{cauchy_extend, laplacian, wirtinger, Holomorphy, Wirtinger};
use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryField, DiscField, FiberField, PolarGrid, C64};
use crate::gauge::GaugeRepresentative;
use crate::geometry::FlowExtension;
use crate::special_solutions::{green_kernel, hif_build, holomorphize, Direction, GreenMode, IntegratingFactor};
use crate::transport::{backproject, xray_attenuated, Backprojection, Discretization};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// How the kernel integral for a residual term is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualPath {
    /// Direct ∂₊ quadrature against the closed-form kernel at every target point.
    Slow,
    /// Antipodal symmetrization and the α-integral done once per β, then a β-quadrature per point.
    Fast,
    /// As `Fast`, with the β-integral replaced by the power series of the kernel in the β-Fourier
    /// coefficients. Returns a polynomial evaluable anywhere in the disc.
    Series,
}

/// e^{−ρ_a} and e^{−ρ̄_ā} share one attenuation; both factors are built once per reconstruction.
#[derive(Clone, Debug)]
pub struct AttenuationFactors {
    pub plain: IntegratingFactor,
    pub conj: IntegratingFactor,
}

impl AttenuationFactors {
    pub fn build(a: &DiscField, disc: &Discretization) -> Self {
        Self { plain: hif_build(a, false, disc), conj: hif_build(a, true, disc) }
    }
    pub fn a(&self) -> &DiscField {
        &self.plain.a
    }
}

/// (−1)^k ∫_{∂₊} F e^{−ik(β+α)} 𝒢(z; β, α) dβ dα on the polar grid.
fn residual_plus(weighted: &BoundaryField, k: i32, grid: &Arc<PolarGrid>, path: ResidualPath) -> DiscField {
    let bg = weighted.grid();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let kf = k as f64;
    let h = weighted.restrict_plus().map_with_coords(|b, a, v| v * C64::from_polar(1.0, -kf * (b + a)));
    let cell = bg.d_beta() * bg.d_alpha();
    let plus = bg.plus_range();
    if path == ResidualPath::Slow {
        let values = grid
            .points()
            .par_iter()
            .map(|&z| {
                let mut acc = ZERO;
                for i in 0..bg.n_beta {
                    for j in plus.clone() {
                        let p = crate::geometry::FanBeamPoint::new(bg.beta(i), bg.alpha(j));
                        acc += h.at(i, j) * green_kernel(z, p, GreenMode::Closed).unwrap_or(ZERO);
                    }
                }
                acc * cell * sign
            })
            .collect();
        return DiscField::from_values(grid, "residual", values).expect("grid sized");
    }
    let g = h.add(&h.scatter(true)).scale(C64::new(0.5, 0.0));
    let phi: Vec<C64> = (0..bg.n_beta)
        .map(|i| plus.clone().map(|j| g.at(i, j) * C64::from_polar(1.0, bg.alpha(j))).sum::<C64>() * bg.d_alpha())
        .collect();
    match path {
        ResidualPath::Fast => {
            let c = sign * bg.d_beta() / (2.0 * PI * PI);
            let values = grid
                .points()
                .par_iter()
                .map(|&z| {
                    let mut acc = ZERO;
                    for (i, p) in phi.iter().enumerate() {
                        let d = C64::new(1.0, 0.0) - z * C64::from_polar(1.0, -bg.beta(i));
                        acc += p / (d * d);
                    }
                    acc * c
                })
                .collect();
            DiscField::from_values(grid, "residual", values).expect("grid sized")
        }
        _ => {
            let nb = bg.n_beta;
            let mut hat = phi.clone();
            crate::fields::quadrature::fft_rows(&mut hat, nb, false);
            let coeffs: Vec<C64> =
                hat.iter().take(nb / 2).enumerate().map(|(j, v)| v / nb as f64 * ((j + 1) as f64 * sign / PI)).collect();
            DiscField::analytic(grid, "residual", move |z| {
                let mut acc = ZERO;
                for b in coeffs.iter().rev() {
                    acc = acc * z + b;
                }
                acc
            })
        }
    }
}

/// (g_{k,+}, g_{k,−}) from ℐ_k = I_a(g' + g_k), g' of degree < k.
pub fn recon_residual(
    data: &BoundaryField,
    k: i32,
    factors: &AttenuationFactors,
    grid: &Arc<PolarGrid>,
    path: ResidualPath,
) -> Result<(DiscField, DiscField)> {
    if k < 1 {
        return Err(AtrtError::InvalidArgument(format!("residual degree must be ≥ 1, got {k}")));
    }
    let data = data.restrict_plus();
    let fp = data.mul(&factors.conj.exp_rho(-1.0));
    let fm = data.mul(&factors.plain.exp_rho(-1.0)).conj();
    let gp = residual_plus(&fp, k, grid, path).named(&format!("g{k}+"));
    let gm = residual_plus(&fm, k, grid, path).conj().named(&format!("g{k}-"));
    Ok((gp, gm))
}

/// Norms and timing for one peeling stage.
#[derive(Clone, Debug)]
pub struct StageDiagnostics {
    pub k: i32,
    pub data_norm_before: f64,
    pub data_norm_after: f64,
    pub g_plus_norm: f64,
    pub g_minus_norm: f64,
    pub seconds: f64,
}

/// State of the residual cascade.
#[derive(Clone, Debug)]
pub struct PeelState {
    /// ℐ after all recovered residuals have been removed.
    pub data: BoundaryField,
    /// `gk[k-1] = (g_{k,+}, g_{k,−})`.
    pub gk: Vec<(DiscField, DiscField)>,
    pub stages: Vec<StageDiagnostics>,
}

impl PeelState {
    /// True when some stage left more data than it received.
    pub fn diverging(&self) -> bool {
        self.stages.iter().any(|s| s.data_norm_after > s.data_norm_before * (1.0 + 1e-9) + 1e-300)
    }
}

/// For k = m … 1: recover g_k from ℐ_k, then ℐ_{k−1} = ℐ_k − I_a g_k.
pub fn peel_cascade(
    data: &BoundaryField,
    m: i32,
    factors: &AttenuationFactors,
    disc: &Discretization,
    path: ResidualPath,
) -> Result<PeelState> {
    let grid = &disc.pgrid;
    let mut cur = data.restrict_plus();
    let zero = DiscField::zeros(grid, "0");
    let mut gk = vec![(zero.clone(), zero); m.max(0) as usize];
    let mut stages = Vec::new();
    for k in (1..=m).rev() {
        let t = Instant::now();
        let (gp, gm) = recon_residual(&cur, k, factors, grid, path)?;
        let gfield = FiberField::zeros(grid, k).with(k, gp.clone())?.with(-k, gm.clone())?;
        let next = cur.sub(&xray_attenuated(&gfield, factors.a(), &disc.forward).data);
        stages.push(StageDiagnostics {
            k,
            data_norm_before: cur.norm_plus(),
            data_norm_after: next.norm_plus(),
            g_plus_norm: gp.norm(),
            g_minus_norm: gm.norm(),
            seconds: t.elapsed().as_secs_f64(),
        });
        gk[k as usize - 1] = (gp, gm);
        cur = next;
    }
    Ok(PeelState { data: cur, gk, stages })
}

/// Output of the (g₀, g_s) stage with its intermediate quantities.
#[derive(Clone, Debug)]
pub struct BulkRecon {
    pub g0: DiscField,
    pub gs: DiscField,
    /// Holomorphic g₊ = g_s − iů₀ and antiholomorphic g₋ = g_s + iǔ₀.
    pub g_plus: DiscField,
    pub g_minus: DiscField,
    /// Modes −1, 0, 1 of D⃗ and D⃖.
    pub d_fwd: FiberField,
    pub d_bwd: FiberField,
    /// Energy of the boundary-trace modes discarded by the two Cauchy extensions.
    pub cauchy_residual: (f64, f64),
}

fn holomorphized_part(
    data: &BoundaryField,
    factor: &IntegratingFactor,
    dir: Direction,
    disc: &Discretization,
) -> (FiberField, BoundaryField) {
    let b = holomorphize(&data.mul(&factor.exp_rho(-1.0)), dir);
    let d = FlowExtension::new(&b)
        .sample(&disc.pgrid, disc.n_theta)
        .zip_with(&factor.exp_samples(1.0), |u, e| u * e)
        .to_fiber(1);
    let trace = a_extend(&b, Sign::Plus).mul(&factor.boundary.map(|w| w.exp()));
    (d, trace)
}

/// (g₀, g_s) from ℐ = I_a(g₀ + X⊥g_s).
pub fn recon_bulk(data: &BoundaryField, factors: &AttenuationFactors, disc: &Discretization) -> Result<BulkRecon> {
    let grid = &disc.pgrid;
    let data = data.restrict_plus();
    let (d_fwd, tr_fwd) = holomorphized_part(&data, &factors.plain, Direction::Forward, disc);
    let (d_bwd, tr_bwd) = holomorphized_part(&data, &factors.conj, Direction::Backward, disc);
    let sp: Vec<C64> = data.sub(&tr_fwd).fiber_average().into_iter().map(|v| -I * v).collect();
    let sm: Vec<C64> = data.sub(&tr_bwd).fiber_average().into_iter().map(|v| I * v).collect();
    let cp = cauchy_extend(&sp, grid, Holomorphy::Holo);
    let cm = cauchy_extend(&sm, grid, Holomorphy::Antiholo);
    let (gp, gm) = (cp.field.named("g+"), cm.field.named("g-"));
    let (f0, b0) = (d_fwd.mode(0).to_grid_only(), d_bwd.mode(0).to_grid_only());
    let gs = gp
        .add(&gm)
        .to_grid_only()
        .scale(C64::new(0.5, 0.0))
        .sub(&f0.sub(&b0).scale(C64::new(0.0, 0.5)))
        .named("gs");
    let u0 = f0.add(&b0).add(&gp.sub(&gm).to_grid_only().scale(I));
    let g0 = wirtinger(&d_fwd.mode(-1), Wirtinger::Del)
        .add(&wirtinger(&d_bwd.mode(1), Wirtinger::Dbar))
        .scale(C64::new(-1.0, 0.0))
        .sub(&factors.a().mul(&u0).to_grid_only().scale(C64::new(0.5, 0.0)))
        .named("g0");
    Ok(BulkRecon { g0, gs, g_plus: gp, g_minus: gm, d_fwd, d_bwd, cauchy_residual: (cp.residual, cm.residual) })
}

/// Full reconstruction with its diagnostics.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rep: GaugeRepresentative,
    pub peel: PeelState,
    pub bulk: BulkRecon,
    pub factor_seconds: f64,
    pub bulk_seconds: f64,
}

pub fn recon_full(data: &BoundaryField, m: i32, a: &DiscField, disc: &Discretization) -> Result<Reconstruction> {
    recon_full_with(data, m, a, disc, ResidualPath::Series)
}

pub fn recon_full_with(
    data: &BoundaryField,
    m: i32,
    a: &DiscField,
    disc: &Discretization,
    path: ResidualPath,
) -> Result<Reconstruction> {
    if m < 0 {
        return Err(AtrtError::InvalidArgument(format!("negative order {m}")));
    }
    let t = Instant::now();
    let factors = AttenuationFactors::build(a, disc);
    let factor_seconds = t.elapsed().as_secs_f64();
    let peel = peel_cascade(data, m, &factors, disc, path)?;
    let t = Instant::now();
    let bulk = recon_bulk(&peel.data, &factors, disc)?;
    let bulk_seconds = t.elapsed().as_secs_f64();
    let rep = GaugeRepresentative { g0: bulk.g0.clone(), gs: bulk.gs.clone(), gk: peel.gk.clone(), m };
    Ok(Reconstruction { rep, peel, bulk, factor_seconds, bulk_seconds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbpKind {
    /// f = −(1/2π) I⊥♯ P₋† I₀f.
    RcI0,
    /// h = (1/2π) I₀♯ P₊† I⊥h.
    RcIperp,
}

/// Filtered backprojection for unattenuated data.
pub fn fbp_unattenuated(data: &BoundaryField, kind: FbpKind, grid: &Arc<PolarGrid>) -> Result<DiscField> {
    let data = data.restrict_plus();
    let c = 1.0 / (2.0 * PI);
    match kind {
        FbpKind::RcI0 => Ok(backproject(&op_p_dagger(&data, Part::Minus), Backprojection::IPerpSharp, grid)?
            .scale(C64::new(-c, 0.0))
            .named("fbp")),
        FbpKind::RcIperp => Ok(backproject(&op_p_dagger(&data, Part::Plus), Backprojection::I0Sharp, grid)?
            .scale(C64::new(c, 0.0))
            .named("fbp")),
    }
}

/// V = Xf + X⊥g seen through I_a: data = I_a(−af + X⊥g).
#[derive(Clone, Debug)]
pub struct DopplerRecon {
    pub minus_af: DiscField,
    pub g: DiscField,
    /// −(−af)/a where |a| ≥ threshold, zero elsewhere.
    pub f: DiscField,
    /// Grid nodes where the division was performed.
    pub mask: Vec<bool>,
    /// curl V = Δg.
    pub curl: DiscField,
}

pub fn doppler_recon(data: &BoundaryField, a: &DiscField, disc: &Discretization, threshold: f64) -> Result<DopplerRecon> {
    let factors = AttenuationFactors::build(a, disc);
    let bulk = recon_bulk(data, &factors, disc)?;
    let grid = &disc.pgrid;
    let av = a.to_grid_only();
    let mask: Vec<bool> = av.values().iter().map(|v| v.norm() >= threshold).collect();
    let f_vals = bulk
        .g0
        .values()
        .iter()
        .zip(av.values())
        .zip(&mask)
        .map(|((g, a), &ok)| if ok { -g / a } else { ZERO })
        .collect();
    let f = DiscField::from_values(grid, "f", f_vals)?;
    let curl = laplacian(&bulk.gs).named("curl");
    Ok(DopplerRecon { minus_af: bulk.g0.named("-af"), g: bulk.gs.named("g"), f, mask, curl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_calculus::{x_op, x_perp};
    use crate::fields::BoundaryGrid;
    use crate::geometry::ChordQuadrature;
    use crate::transport::{xray_i0, xray_perp, ForwardConfig};

    fn disc(n: usize) -> Discretization {
        let pgrid = PolarGrid::new(24, 48).unwrap();
        let forward = ForwardConfig::new(BoundaryGrid::new(n, n).unwrap(), ChordQuadrature::new(2.0 / 256.0, 4));
        Discretization::new(pgrid, forward, 64, 8)
    }

    fn gaussian_a(g: &Arc<PolarGrid>) -> DiscField {
        DiscField::analytic(g, "a", |z| C64::new(0.5, 0.2) * (-2.0 * (z - 0.2).norm_sqr()).exp())
    }

    #[test]
    fn residual_paths_agree() {
        let d = disc(64);
        let a = gaussian_a(&d.pgrid);
        let f = FiberField::zeros(&d.pgrid, 2)
            .with(2, DiscField::analytic(&d.pgrid, "z", |z| z + 0.5))
            .unwrap()
            .with(-2, DiscField::analytic(&d.pgrid, "zb", |z| z.conj() * z.conj()))
            .unwrap();
        let data = xray_attenuated(&f, &a, &d.forward).data;
        let fac = AttenuationFactors::build(&a, &d);
        let slow = recon_residual(&data, 2, &fac, &d.pgrid, ResidualPath::Slow).unwrap();
        let fast = recon_residual(&data, 2, &fac, &d.pgrid, ResidualPath::Fast).unwrap();
        let series = recon_residual(&data, 2, &fac, &d.pgrid, ResidualPath::Series).unwrap();
        let scale = slow.0.max_abs() + slow.1.max_abs();
        assert!(slow.0.sub(&fast.0).max_abs() < 1e-9 * scale);
        assert!(slow.1.sub(&fast.1).max_abs() < 1e-9 * scale);
        assert!(series.0.rel_error(&slow.0, 0.5) < 1e-9);
        assert!(series.0.rel_error(&f.mode(2), 0.9) < 1e-3, "{}", series.0.rel_error(&f.mode(2), 0.9));
        assert!(series.1.rel_error(&f.mode(-2), 0.9) < 1e-3, "{}", series.1.rel_error(&f.mode(-2), 0.9));
    }

    #[test]
    fn unattenuated_degree_one_round_trip() {
        let d = disc(64);
        let zero = DiscField::zeros(&d.pgrid, "a");
        let z0 = DiscField::analytic(&d.pgrid, "Z0", |_| C64::new(1.0 / PI.sqrt(), 0.0));
        let f = FiberField::zeros(&d.pgrid, 1).with(1, z0.clone()).unwrap();
        let data = xray_attenuated(&f, &zero, &d.forward).data;
        let fac = AttenuationFactors::build(&zero, &d);
        let (gp, gm) = recon_residual(&data, 1, &fac, &d.pgrid, ResidualPath::Series).unwrap();
        assert!(gp.sub(&z0).max_abs() < 1e-5, "{}", gp.sub(&z0).max_abs());
        assert!(gm.max_abs() < 1e-5);
    }

    #[test]
    fn residual_order_matters() {
        let d = disc(64);
        let a = gaussian_a(&d.pgrid);
        let f = FiberField::zeros(&d.pgrid, 2)
            .with(1, DiscField::analytic(&d.pgrid, "g1", |z| z))
            .unwrap()
            .with(2, DiscField::analytic(&d.pgrid, "g2", |z| z * z + 1.0))
            .unwrap();
        let data = xray_attenuated(&f, &a, &d.forward).data;
        let fac = AttenuationFactors::build(&a, &d);
        let (g1_early, _) = recon_residual(&data, 1, &fac, &d.pgrid, ResidualPath::Series).unwrap();
        assert!(g1_early.rel_error(&f.mode(1), 0.9) > 0.1);
        let peel = peel_cascade(&data, 2, &fac, &d, ResidualPath::Series).unwrap();
        assert!(peel.gk[0].0.rel_error(&f.mode(1), 0.9) < 1e-3);
        assert!(peel.data.norm_plus() < 1e-4 * data.norm_plus());
    }

    #[test]
    fn bulk_recovers_g0_and_gs() {
        let d = disc(64);
        let a = gaussian_a(&d.pgrid);
        let g0 = DiscField::analytic(&d.pgrid, "g0", |z| (-4.0 * (z - 0.1).norm_sqr()).exp() * C64::new(1.0, 0.5));
        let gs = DiscField::analytic(&d.pgrid, "gs", |z| (1.0 - z.norm_sqr()) * (z.conj() * 0.5 + 0.3));
        let f = FiberField::from_disc(g0.clone(), 1).add(&x_perp(&FiberField::from_disc(gs.clone(), 0)));
        let data = xray_attenuated(&f, &a, &d.forward).data;
        let fac = AttenuationFactors::build(&a, &d);
        let b = recon_bulk(&data, &fac, &d).unwrap();
        let (e0, es) = (b.g0.rel_error(&g0, 0.9), b.gs.rel_error(&gs, 0.9));
        assert!(e0 < 2e-2 && es < 2e-2, "{e0} {es}");
        let zero = recon_bulk(&BoundaryField::zeros(d.bgrid()), &fac, &d).unwrap();
        assert!(zero.g0.max_abs() == 0.0 && zero.gs.max_abs() == 0.0);
    }

    #[test]
    fn kernel_data_gives_zero_representative() {
        let d = disc(64);
        let a = gaussian_a(&d.pgrid);
        let h = FiberField::zeros(&d.pgrid, 1)
            .with(1, DiscField::analytic(&d.pgrid, "h1", |z| z * (1.0 - z.norm_sqr())))
            .unwrap()
            .with(0, DiscField::analytic(&d.pgrid, "h0", |z| C64::new(1.0 - z.norm_sqr(), 0.0)))
            .unwrap();
        let f = x_op(&h).add(&h.mul_disc(&a));
        let data = xray_attenuated(&f, &a, &d.forward).data;
        assert!(data.norm_plus() < 1e-6 * h.parseval_norm());
        let r = recon_full(&data, 2, &a, &d).unwrap();
        assert!(r.rep.reassemble().parseval_norm() < 1e-4);
    }

    #[test]
    fn fbp_formulas() {
        let d = disc(128);
        let zero = DiscField::zeros(&d.pgrid, "a");
        let bump = DiscField::analytic(&d.pgrid, "b", |z| C64::new((-6.0 * (z - 0.2).norm_sqr()).exp(), 0.0));
        let rec = fbp_unattenuated(&xray_i0(&bump, &zero, &d.forward), FbpKind::RcI0, &d.pgrid).unwrap();
        assert!(rec.rel_error(&bump, 0.9) < 1e-2, "{}", rec.rel_error(&bump, 0.9));
        for h in [
            DiscField::analytic(&d.pgrid, "p", |z| C64::new(1.0 - z.norm_sqr(), 0.0)),
            DiscField::analytic(&d.pgrid, "z3", |z| z * z * z),
        ] {
            let rec = fbp_unattenuated(&xray_perp(&h, &zero, &d.forward), FbpKind::RcIperp, &d.pgrid).unwrap();
            assert!(rec.rel_error(&h, 0.9) < 1e-2, "{}", rec.rel_error(&h, 0.9));
        }
    }

    #[test]
    fn doppler_without_attenuation_sees_only_g() {
        let d = disc(64);
        let zero = DiscField::zeros(&d.pgrid, "a");
        let pot = DiscField::analytic(&d.pgrid, "f", |z| C64::new(1.0 - z.norm_sqr(), 0.0) * (z + 1.0));
        let g = DiscField::analytic(&d.pgrid, "g", |z| C64::new((1.0 - z.norm_sqr()) * (1.0 + z.re), 0.0));
        let v = x_op(&FiberField::from_disc(pot, 0)).add(&x_perp(&FiberField::from_disc(g.clone(), 0)));
        let data = xray_attenuated(&v, &zero, &d.forward).data;
        let r = doppler_recon(&data, &zero, &d, 1e-3).unwrap();
        assert!(r.g.rel_error(&g, 0.9) < 1e-2, "{}", r.g.rel_error(&g, 0.9));
        assert!(r.minus_af.max_abs() < 1e-3 * g.max_abs());
        assert!(r.mask.iter().all(|m| !m) && r.f.max_abs() == 0.0);
    }
}
