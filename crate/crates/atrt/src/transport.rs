//! Attenuated X-ray transform, transport solutions and backprojections.

use crate::complex_calculus::x_perp;
use crate::error::{AtrtError, Result};
use crate::fields::{BoundaryField, BoundaryGrid, DiscField, DiscSampler, FiberField, PolarGrid, SmSamples, C64};
use crate::geometry::{exit_time_unchecked, ChordQuadrature, FanBeamPoint, FlowExtension, FlowExtensionPerp};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Something that can be evaluated at (x, θ) ∈ SM.
pub trait SmFunction: Sync {
    fn eval(&self, x: C64, theta: f64) -> C64;
}

/// Closure adaptor for [`SmFunction`].
pub struct SmFn<F>(pub F);

impl<F: Fn(C64, f64) -> C64 + Sync> SmFunction for SmFn<F> {
    fn eval(&self, x: C64, theta: f64) -> C64 {
        (self.0)(x, theta)
    }
}

/// Fast evaluator of a FiberField along rays.
pub struct FiberSampler<'a> {
    modes: Vec<(i32, DiscSampler<'a>)>,
}

impl<'a> FiberSampler<'a> {
    pub fn new(u: &'a FiberField) -> Self {
        Self { modes: u.stored_modes().map(|(&k, f)| (k, f.sampler())).collect() }
    }
}

impl SmFunction for FiberSampler<'_> {
    #[inline]
    fn eval(&self, x: C64, theta: f64) -> C64 {
        let e = C64::from_polar(1.0, theta);
        self.modes.iter().map(|(k, s)| s.eval(x) * e.powi(*k)).sum()
    }
}

/// Ray data on ∂₊SM with its header record.
#[derive(Clone, Debug)]
pub struct Sinogram {
    pub data: BoundaryField,
    /// sup |a| of the attenuation used.
    pub a_inf: f64,
    /// Tensor order of the integrand.
    pub m: i32,
}

impl Sinogram {
    pub fn grid(&self) -> BoundaryGrid {
        self.data.grid()
    }
    /// L²(∂₊SM, dβ dα) norm.
    pub fn norm(&self) -> f64 {
        self.data.norm_plus()
    }
}

/// Forward-transform settings: torus grid and chord quadrature.
#[derive(Clone, Debug)]
pub struct ForwardConfig {
    pub grid: BoundaryGrid,
    pub quad: ChordQuadrature,
}

impl ForwardConfig {
    pub fn new(grid: BoundaryGrid, quad: ChordQuadrature) -> Self {
        Self { grid, quad }
    }
}

/// Every grid a pipeline stage needs: disc grid, torus grid, chord rule, fiber sampling and cutoff.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub pgrid: Arc<PolarGrid>,
    pub forward: ForwardConfig,
    pub n_theta: usize,
    pub k_max: i32,
}

impl Discretization {
    pub fn new(pgrid: Arc<PolarGrid>, forward: ForwardConfig, n_theta: usize, k_max: i32) -> Self {
        Self { pgrid, forward, n_theta, k_max }
    }

    /// 32 × 64 disc grid, 256 × 256 torus, h_t = 2/512, 128 directions, K = 16.
    pub fn standard() -> Self {
        Self::new(
            PolarGrid::new(32, 64).expect("valid"),
            ForwardConfig::new(BoundaryGrid::new(256, 256).expect("aligned"), ChordQuadrature::default()),
            128,
            16,
        )
    }

    pub fn bgrid(&self) -> BoundaryGrid {
        self.forward.grid
    }
    pub fn quad(&self) -> &ChordQuadrature {
        &self.forward.quad
    }
}

fn is_zero_field(a: &DiscField) -> bool {
    a.max_abs() == 0.0 && a.eval(C64::new(0.123, 0.456)) == ZERO
}

/// I_a f(β,α) = ∫_0^{2cos α} f(e^{iβ}+tv, θ) exp(∫_0^t a) dt on the ∂₊ grid nodes.
pub fn xray_attenuated_raw<F: SmFunction + ?Sized>(f: &F, a: &DiscField, cfg: &ForwardConfig) -> BoundaryField {
    let g = cfg.grid;
    let quad = &cfg.quad;
    let zero_a = is_zero_field(a);
    let sa = a.sampler();
    let plus: Vec<(usize, usize)> = (0..g.n_beta).flat_map(|i| g.plus_range().map(move |j| (i, j))).collect();
    let vals: Vec<C64> = plus
        .par_iter()
        .map(|&(i, j)| {
            let fp = FanBeamPoint::new(g.beta(i), g.alpha(j));
            let ch = quad.chord(fp);
            let th = fp.theta();
            let pts = ch.points();
            if zero_a {
                pts.iter().zip(&ch.w).map(|(&x, w)| f.eval(x, th) * w).sum()
            } else {
                let av: Vec<C64> = pts.iter().map(|&x| sa.eval(x)).collect();
                let cum = quad.cumulative(&ch, &av);
                pts.iter()
                    .zip(&ch.w)
                    .zip(&cum)
                    .map(|((&x, w), c)| f.eval(x, th) * c.exp() * w)
                    .sum()
            }
        })
        .collect();
    BoundaryField::extend_by_zero(g, &vals).expect("one value per incoming node")
}

/// Attenuated transform of a FiberField.
pub fn xray_attenuated(f: &FiberField, a: &DiscField, cfg: &ForwardConfig) -> Sinogram {
    let data = xray_attenuated_raw(&FiberSampler::new(f), a, cfg);
    Sinogram { data, a_inf: sup_abs(a), m: f.order() }
}

/// I_a of a degree-0 function.
pub fn xray_i0(f: &DiscField, a: &DiscField, cfg: &ForwardConfig) -> BoundaryField {
    let s = f.sampler();
    xray_attenuated_raw(&SmFn(|x, _| s.eval(x)), a, cfg)
}

/// I⊥h := I(X⊥h) for a function h on M.
pub fn xray_perp(h: &DiscField, a: &DiscField, cfg: &ForwardConfig) -> BoundaryField {
    let xh = x_perp(&FiberField::from_disc(h.clone(), 1));
    xray_attenuated_raw(&FiberSampler::new(&xh), a, cfg)
}

/// sup |a| over a grid four times finer than the field grid.
pub fn sup_abs(a: &DiscField) -> f64 {
    let g = a.grid();
    let fine = PolarGrid::with_cache(4 * g.n_rho(), 4 * g.n_beta(), g.cache_cells()).expect("valid grid");
    let mut pts = fine.points();
    pts.extend((0..4 * g.n_beta()).map(|j| C64::from_polar(1.0, fine.beta(j))));
    let vals = a.eval_many(&pts);
    vals.iter().fold(a.max_abs(), |m, v| m.max(v.norm()))
}

/// u(x,θ) = ∫_0^{τ(x,θ)} f(x+tv,θ) exp(∫_0^t a) dt, the solution of Xu + au = −f with u|∂₋ = 0.
pub fn transport_solve_samples<F: SmFunction + ?Sized>(
    f: &F,
    a: &DiscField,
    grid: &Arc<PolarGrid>,
    n_theta: usize,
    quad: &ChordQuadrature,
) -> SmSamples {
    let sa = a.sampler();
    let zero_a = is_zero_field(a);
    SmSamples::from_fn(grid, n_theta, |x, th| {
        let tau = exit_time_unchecked(x, th);
        if tau <= 0.0 {
            return ZERO;
        }
        let v = C64::from_polar(1.0, th);
        let ch = quad.segment(FanBeamPoint::new(0.0, 0.0), tau);
        let pts: Vec<C64> = ch.t.iter().map(|t| x + v * t).collect();
        if zero_a {
            pts.iter().zip(&ch.w).map(|(&p, w)| f.eval(p, th) * w).sum()
        } else {
            let av: Vec<C64> = pts.iter().map(|&p| sa.eval(p)).collect();
            let cum = quad.cumulative(&ch, &av);
            pts.iter().zip(&ch.w).zip(&cum).map(|((&p, w), c)| f.eval(p, th) * c.exp() * w).sum()
        }
    })
}

pub fn transport_solve(
    f: &FiberField,
    a: &DiscField,
    grid: &Arc<PolarGrid>,
    n_theta: usize,
    k_max: i32,
    quad: &ChordQuadrature,
) -> FiberField {
    transport_solve_samples(&FiberSampler::new(f), a, grid, n_theta, quad).to_fiber(k_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backprojection {
    /// I₀♯h = 2π(h_ψ)₀
    I0Sharp,
    /// I⊥♯h = −2π(X⊥h_ψ)₀
    IPerpSharp,
    /// I₀*h = ((h/cos α)_ψ)₀
    I0Star,
}

/// Angular nodes used for fiber averages: twice the α resolution.
fn default_n_theta(g: BoundaryGrid) -> usize {
    2 * g.n_alpha
}

/// Backprojection of ∂₊ data onto the polar grid.
pub fn backproject(h: &BoundaryField, kind: Backprojection, grid: &Arc<PolarGrid>) -> Result<DiscField> {
    backproject_with(h, kind, grid, default_n_theta(h.grid()))
}

pub fn backproject_with(h: &BoundaryField, kind: Backprojection, grid: &Arc<PolarGrid>, n_theta: usize) -> Result<DiscField> {
    let avg = |s: SmSamples| -> Vec<C64> {
        s.data().chunks(n_theta).map(|r| r.iter().sum::<C64>() / n_theta as f64).collect()
    };
    let (vals, name) = match kind {
        Backprojection::I0Sharp => {
            let fe = FlowExtension::new(h);
            let v = avg(fe.sample(grid, n_theta));
            (v.into_iter().map(|x| x * (2.0 * PI)).collect::<Vec<_>>(), "I0#")
        }
        Backprojection::IPerpSharp => {
            let fe = FlowExtensionPerp::new(h);
            let v = avg(fe.sample(grid, n_theta));
            (v.into_iter().map(|x| x * (-2.0 * PI)).collect(), "Iperp#")
        }
        Backprojection::I0Star => {
            let q = divide_by_cos(h)?;
            let fe = FlowExtension::new(&q);
            (avg(fe.sample(grid, n_theta)), "I0*")
        }
    };
    DiscField::from_values(grid, name, vals)
}

/// h / cos α on ∂₊; refuses data that does not vanish at glancing angles.
pub fn divide_by_cos(h: &BoundaryField) -> Result<BoundaryField> {
    let g = h.grid();
    let r = g.plus_range();
    let (e0, e1) = (r.start, r.end - 1);
    let mut edge = 0.0f64;
    let mut next = 0.0f64;
    for i in 0..g.n_beta {
        edge = edge.max((h.at(i, e0) / g.alpha(e0).cos()).norm()).max((h.at(i, e1) / g.alpha(e1).cos()).norm());
        next = next.max((h.at(i, e0 + 1) / g.alpha(e0 + 1).cos()).norm()).max((h.at(i, e1 - 1) / g.alpha(e1 - 1).cos()).norm());
    }
    if edge > 2.0 * next + 1e-12 * (1.0 + h.max_abs()) {
        return Err(AtrtError::GlancingDivision(format!(
            "|h/cos α| at the glancing columns is {edge:.3e} against {next:.3e} one column in"
        )));
    }
    Ok(h.map_with_coords(|_, a, v| if a.cos() > 0.0 { v / a.cos() } else { ZERO }))
}

/// ((g)_ψ)₀ for data already divided by cos α (closed forms avoid the division).
pub fn backproject_over_cos(g_over_cos: &BoundaryField, grid: &Arc<PolarGrid>) -> DiscField {
    let n_theta = default_n_theta(g_over_cos.grid());
    let fe = FlowExtension::new(g_over_cos);
    let v: Vec<C64> = fe
        .sample(grid, n_theta)
        .data()
        .chunks(n_theta)
        .map(|r| r.iter().sum::<C64>() / n_theta as f64)
        .collect();
    DiscField::from_values(grid, "I0*", v).expect("finite")
}

/// ‖I_a f‖ / (√2 e^{2a∞} ‖f‖); the continuity bound says this is ≤ 1.
pub fn continuity_ratio(f: &FiberField, a: &DiscField, cfg: &ForwardConfig) -> f64 {
    let s = xray_attenuated(f, a, cfg);
    let nf = f.parseval_norm();
    if nf == 0.0 {
        return 0.0;
    }
    s.norm() / (2f64.sqrt() * (2.0 * s.a_inf).exp() * nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_ops::{BoundaryBasisIndex, Family};
    use crate::complex_calculus::x_op;

    fn cfg(n: usize, h: f64) -> ForwardConfig {
        ForwardConfig::new(BoundaryGrid::new(n, n).unwrap(), ChordQuadrature::new(h, 4))
    }

    fn zk(g: &Arc<PolarGrid>, k: i32) -> DiscField {
        let c = ((k as f64 + 1.0) / (2.0 * PI * PI)).sqrt();
        DiscField::analytic(g, "Z", move |z| z.powi(k) * c)
    }

    #[test]
    fn unattenuated_z0_is_cos_alpha() {
        let pg = PolarGrid::new(8, 8).unwrap();
        let c = cfg(32, 0.05);
        let zero = DiscField::zeros(&pg, "a");
        let s = xray_i0(&zk(&pg, 0), &zero, &c);
        let exact = BoundaryField::from_fn_plus(c.grid, |_, a| C64::new(2f64.sqrt() / PI * a.cos(), 0.0));
        assert!(s.sub(&exact).max_abs() < 1e-13);
    }

    #[test]
    fn unattenuated_zk_matches_closed_form() {
        let pg = PolarGrid::new(8, 8).unwrap();
        let c = cfg(64, 0.05);
        let zero = DiscField::zeros(&pg, "a");
        for k in [1, 3, 5] {
            let s = xray_i0(&zk(&pg, k), &zero, &c);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let exact = BoundaryBasisIndex::new(Family::UPrime, k as i64, k as i64)
                .sample(c.grid)
                .scale(C64::new(sign / (k as f64 + 1.0).sqrt(), 0.0));
            assert!(s.sub(&exact).norm_plus() / exact.norm_plus() < 1e-10);
        }
    }

    #[test]
    fn transform_of_x_derivative_vanishes() {
        let pg = PolarGrid::new(8, 8).unwrap();
        let c = cfg(32, 0.05);
        let h = DiscField::analytic(&pg, "h", |z| C64::new((1.0 - z.norm_sqr()).powi(2), 0.0) * (z + 0.3));
        let xh = x_op(&FiberField::from_disc(h, 1));
        let s = xray_attenuated(&xh, &DiscField::zeros(&pg, "a"), &c);
        assert!(s.data.max_abs() < 1e-8, "{}", s.data.max_abs());
    }

    #[test]
    fn transport_trace_is_the_sinogram_and_tau_for_unit_source() {
        let pg = PolarGrid::new(6, 8).unwrap();
        let q = ChordQuadrature::new(0.05, 4);
        let one = FiberField::from_disc(DiscField::constant(&pg, "1", C64::new(1.0, 0.0)), 0);
        let s = transport_solve_samples(&FiberSampler::new(&one), &DiscField::zeros(&pg, "a"), &pg, 8, &q);
        let pts = pg.points();
        for (n, x) in pts.iter().enumerate() {
            for l in 0..8 {
                let th = 2.0 * PI * l as f64 / 8.0;
                assert!((s.data()[n * 8 + l] - exit_time_unchecked(*x, th)).norm() < 1e-12);
            }
        }
        // trace on ∂₊ equals I_a f
        let a = DiscField::analytic(&pg, "a", |z| C64::new(0.4, 0.2) * (-(z.norm_sqr())).exp());
        let f = FiberField::zeros(&pg, 1)
            .with(1, DiscField::analytic(&pg, "f", |z| z + 0.5))
            .unwrap();
        let fs = FiberSampler::new(&f);
        let c = cfg(16, 0.05);
        let sino = xray_attenuated(&f, &a, &c);
        let p = FanBeamPoint::new(c.grid.beta(3), c.grid.alpha(6));
        let v = {
            let tau = exit_time_unchecked(p.base(), p.theta());
            let ch = c.quad.segment(FanBeamPoint::new(0.0, 0.0), tau);
            let pts: Vec<C64> = ch.t.iter().map(|t| p.base() + p.direction() * t).collect();
            let sa = a.sampler();
            let av: Vec<C64> = pts.iter().map(|&x| sa.eval(x)).collect();
            let cum = c.quad.cumulative(&ch, &av);
            pts.iter().zip(&ch.w).zip(&cum).map(|((&x, w), cc)| fs.eval(x, p.theta()) * cc.exp() * w).sum::<C64>()
        };
        assert!((v - sino.data.at(3, 6)).norm() < 1e-12);
    }

    #[test]
    fn i0_sharp_of_ukk() {
        let pg = PolarGrid::new(10, 16).unwrap();
        let g = BoundaryGrid::new(128, 128).unwrap();
        for k in 1..4i32 {
            let h = BoundaryBasisIndex::new(Family::U, k as i64, k as i64).sample(g);
            let b = backproject(&h, Backprojection::I0Sharp, &pg).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let exact = DiscField::analytic(&pg, "e", move |z| z.powi(k) * (sign * 2f64.sqrt()));
            let e = b.sub(&exact).to_grid_only().max_abs();
            assert!(e < 1e-6, "k={k} err {e}");
        }
        // u_{0,0} = 2φ_{0,0} is the constant √2/π, so the k = 0 case doubles
        let b = backproject(&BoundaryBasisIndex::new(Family::U, 0, 0).sample(g), Backprojection::I0Sharp, &pg).unwrap();
        assert!((b.value(2, 3) - 2.0 * 2f64.sqrt()).norm() < 1e-10);
        assert_eq!(backproject(&BoundaryField::zeros(g), Backprojection::I0Sharp, &pg).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn i0_star_refuses_non_vanishing_data() {
        let pg = PolarGrid::new(4, 8).unwrap();
        let g = BoundaryGrid::new(32, 32).unwrap();
        let h = BoundaryField::from_fn_plus(g, |_, _| C64::new(1.0, 0.0));
        assert!(matches!(backproject(&h, Backprojection::I0Star, &pg), Err(AtrtError::GlancingDivision(_))));
        let h = BoundaryField::from_fn_plus(g, |_, a| C64::new(a.cos(), 0.0));
        let b = backproject(&h, Backprojection::I0Star, &pg).unwrap();
        assert!(b.sub(&DiscField::constant(&pg, "1", C64::new(1.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn continuity_bound_on_simple_field() {
        let pg = PolarGrid::new(12, 16).unwrap();
        let c = cfg(32, 0.05);
        let f = FiberField::zeros(&pg, 2)
            .with(0, DiscField::analytic(&pg, "f0", |z| (-(z - 0.2).norm_sqr() * 4.0).exp().into()))
            .unwrap()
            .with(2, DiscField::analytic(&pg, "f2", |z| z.conj()))
            .unwrap();
        let a = DiscField::analytic(&pg, "a", |z| C64::new(0.5, 0.3) * (1.0 - z.norm_sqr()));
        assert!(continuity_ratio(&f, &a, &c) <= 1.0);
    }
}
