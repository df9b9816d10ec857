//! Fan-beam geometry of the unit disc: exit times, scattering relations,
//! footpoints, chord quadrature, Santaló integration and flow extension.

use crate::error::{AtrtError, Result};
use crate::fields::quadrature::{cumulative_matrix, gauss_legendre};
use crate::fields::{BoundaryField, BoundaryGrid, FiberField, PolarGrid, SmSamples, C64};
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

const DISC_SLACK: f64 = 1e-12;

/// A boundary ray in fan-beam coordinates: base point e^{iβ}, direction β+π+α.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanBeamPoint {
    pub beta: f64,
    pub alpha: f64,
}

impl FanBeamPoint {
    pub fn new(beta: f64, alpha: f64) -> Self {
        Self { beta, alpha }
    }
    pub fn base(&self) -> C64 {
        C64::from_polar(1.0, self.beta)
    }
    pub fn theta(&self) -> f64 {
        self.beta + PI + self.alpha
    }
    pub fn direction(&self) -> C64 {
        C64::from_polar(1.0, self.theta())
    }
    /// Incoming iff cos α ≥ 0.
    pub fn is_incoming(&self) -> bool {
        self.alpha.cos() >= 0.0
    }
    pub fn chord_length(&self) -> f64 {
        (2.0 * self.alpha.cos()).max(0.0)
    }
    /// Both angles reduced to [0, 2π).
    pub fn reduced(&self) -> Self {
        Self { beta: self.beta.rem_euclid(TAU), alpha: self.alpha.rem_euclid(TAU) }
    }
}

fn check_disc(x: C64) -> Result<()> {
    let r = x.norm();
    if r > 1.0 + DISC_SLACK || !r.is_finite() {
        Err(AtrtError::OutsideDisc(r))
    } else {
        Ok(())
    }
}

/// (x·v, x·v⊥) with v = e^{iθ} and v⊥ = (sin θ, −cos θ).
#[inline]
fn chord_coords(x: C64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (x.re * c + x.im * s, x.re * s - x.im * c)
}

/// Forward time from x to ∂M along direction θ.
pub fn exit_time(x: C64, theta: f64) -> Result<f64> {
    check_disc(x)?;
    Ok(exit_time_unchecked(x, theta))
}

#[inline]
pub fn exit_time_unchecked(x: C64, theta: f64) -> f64 {
    let (d, s) = chord_coords(x, theta);
    (-d + (1.0 - s * s).max(0.0).sqrt()).max(0.0)
}

/// 𝒮(β,α) = (β+π+2α, π−α), 𝒮_A(β,α) = (β+π+2α, −α), reduced mod 2π.
pub fn scattering(p: FanBeamPoint, antipodal: bool) -> FanBeamPoint {
    let beta = p.beta + PI + 2.0 * p.alpha;
    let alpha = if antipodal { -p.alpha } else { PI - p.alpha };
    FanBeamPoint { beta, alpha }.reduced()
}

/// Incoming boundary coordinates (β₋, α₋) of the line through (x, θ); α₋ ∈ [−π/2, π/2].
pub fn footpoint(x: C64, theta: f64) -> Result<FanBeamPoint> {
    check_disc(x)?;
    Ok(footpoint_unchecked(x, theta))
}

#[inline]
pub fn footpoint_unchecked(x: C64, theta: f64) -> FanBeamPoint {
    let (_, s) = chord_coords(x, theta);
    let alpha = -s.clamp(-1.0, 1.0).asin();
    FanBeamPoint { beta: (theta - alpha - PI).rem_euclid(TAU), alpha }
}

/// Composite Gauss–Legendre rule along chords with panels of length ≤ `h_t`.
#[derive(Clone, Debug)]
pub struct ChordQuadrature {
    pub h_t: f64,
    pub q: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Nodes and weights on [0, L] plus the panel layout.
#[derive(Clone, Debug)]
pub struct Chord {
    pub entry: FanBeamPoint,
    pub length: f64,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    panels: usize,
    panel_len: f64,
}

impl Chord {
    pub fn point(&self, k: usize) -> C64 {
        self.entry.base() + self.entry.direction() * self.t[k]
    }
    pub fn points(&self) -> Vec<C64> {
        (0..self.t.len()).map(|k| self.point(k)).collect()
    }
    pub fn theta(&self) -> f64 {
        self.entry.theta()
    }
}

impl Default for ChordQuadrature {
    fn default() -> Self {
        Self::new(2.0 / 512.0, 4)
    }
}

impl ChordQuadrature {
    pub fn new(h_t: f64, q: usize) -> Self {
        let (nodes, weights) = gauss_legendre(q);
        let cumulative = cumulative_matrix(&nodes);
        Self { h_t, q, nodes, weights, cumulative }
    }

    pub fn panels(&self, length: f64) -> usize {
        ((length / self.h_t).ceil() as usize).max(1)
    }

    /// Quadrature rule on the segment [0, length].
    pub fn segment(&self, entry: FanBeamPoint, length: f64) -> Chord {
        let n = self.panels(length);
        let pl = length / n as f64;
        let mut t = Vec::with_capacity(n * self.q);
        let mut w = Vec::with_capacity(n * self.q);
        for p in 0..n {
            let a = p as f64 * pl;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                t.push(a + 0.5 * pl * (x + 1.0));
                w.push(0.5 * pl * wt);
            }
        }
        Chord { entry, length, t, w, panels: n, panel_len: pl }
    }

    /// Full chord from an incoming boundary point.
    pub fn chord(&self, entry: FanBeamPoint) -> Chord {
        self.segment(entry, entry.chord_length())
    }

    /// ∫_0^{t_k} g for every node t_k, given g at the nodes.
    pub fn cumulative(&self, chord: &Chord, g: &[C64]) -> Vec<C64> {
        let q = self.q;
        let half = 0.5 * chord.panel_len;
        let mut out = vec![C64::new(0.0, 0.0); g.len()];
        let mut offset = C64::new(0.0, 0.0);
        for p in 0..chord.panels {
            let gp = &g[p * q..(p + 1) * q];
            for k in 0..q {
                let mut s = C64::new(0.0, 0.0);
                for l in 0..q {
                    s += gp[l] * self.cumulative[k * q + l];
                }
                out[p * q + k] = offset + s * half;
            }
            let total: C64 = gp.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
            offset += total * half;
        }
        out
    }

    /// ∫_0^L g from node values.
    pub fn integrate(&self, chord: &Chord, g: &[C64]) -> C64 {
        g.iter().zip(&chord.w).map(|(v, w)| v * w).sum()
    }
}

/// ∫_{SM} f via ∫_{∂₊SM} cos α ∫_0^{2cos α} f dt dβ dα on the given torus grid.
pub fn santalo_integrate<F>(f: F, grid: BoundaryGrid, quad: &ChordQuadrature) -> C64
where
    F: Fn(C64, f64) -> C64 + Sync,
{
    let plus: Vec<(usize, usize)> = (0..grid.n_beta)
        .flat_map(|i| grid.plus_range().map(move |j| (i, j)))
        .collect();
    let parts: Vec<C64> = plus
        .par_iter()
        .map(|&(i, j)| {
            let fp = FanBeamPoint::new(grid.beta(i), grid.alpha(j));
            let ch = quad.chord(fp);
            let th = fp.theta();
            let s: C64 = (0..ch.t.len()).map(|k| f(ch.point(k), th) * ch.w[k]).sum();
            s * fp.alpha.cos()
        })
        .collect();
    parts.iter().sum::<C64>() * grid.d_beta() * grid.d_alpha()
}

/// h_ψ(x, θ) = h(footpoint(x, θ)) for ∂₊ data `h`, evaluated through its A₊ extension.
pub struct FlowExtension {
    even: BoundaryField,
}

impl FlowExtension {
    pub fn new(h: &BoundaryField) -> Self {
        Self { even: h.scatter_extend(1.0) }
    }

    /// Uses a field that is already defined on all of ∂SM (no re-extension).
    pub fn from_full(h: BoundaryField) -> Self {
        Self { even: h }
    }

    pub fn eval(&self, x: C64, theta: f64) -> C64 {
        let fp = footpoint_unchecked(x, theta);
        self.even.eval(fp.beta, fp.alpha)
    }

    /// Samples of h_ψ on the SM grid.
    pub fn sample(&self, grid: &Arc<PolarGrid>, n_theta: usize) -> SmSamples {
        SmSamples::from_fn(grid, n_theta, |x, th| self.eval(x, th))
    }

    pub fn gridded(&self, grid: &Arc<PolarGrid>, n_theta: usize, k_max: i32) -> FiberField {
        self.sample(grid, n_theta).to_fiber(k_max)
    }
}

/// Pointwise flow extension h_ψ(x, θ).
pub fn flow_extend(h: &BoundaryField, x: C64, theta: f64) -> Result<C64> {
    check_disc(x)?;
    Ok(FlowExtension::new(h).eval(x, theta))
}

/// Gridded flow extension projected to harmonics |k| ≤ k_max.
pub fn flow_extend_gridded(h: &BoundaryField, grid: &Arc<PolarGrid>, n_theta: usize, k_max: i32) -> FiberField {
    FlowExtension::new(h).gridded(grid, n_theta, k_max)
}

/// X⊥(h_ψ) = ((∂_β − ∂_α)A₊h)(footpoint) / cos α₋.
pub struct FlowExtensionPerp {
    deriv: BoundaryField,
}

impl FlowExtensionPerp {
    pub fn new(h: &BoundaryField) -> Self {
        let e = h.scatter_extend(1.0);
        Self { deriv: e.derivative(false).sub(&e.derivative(true)) }
    }

    pub fn eval(&self, x: C64, theta: f64) -> C64 {
        let fp = footpoint_unchecked(x, theta);
        self.deriv.eval(fp.beta, fp.alpha) / fp.alpha.cos().max(1e-300)
    }

    pub fn sample(&self, grid: &Arc<PolarGrid>, n_theta: usize) -> SmSamples {
        SmSamples::from_fn(grid, n_theta, |x, th| self.eval(x, th))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn exit_time_examples() {
        assert_abs_diff_eq!(exit_time(C64::new(0.0, 0.0), 1.3).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exit_time(C64::new(0.5, 0.0), 0.0).unwrap(), 0.5, epsilon = 1e-15);
        let p = FanBeamPoint::new(0.7, 0.4);
        assert_abs_diff_eq!(exit_time(p.base(), p.theta()).unwrap(), 2.0 * 0.4f64.cos(), epsilon = 1e-14);
        assert!(exit_time(C64::new(1.1, 0.0), 0.0).is_err());
    }

    #[test]
    fn scattering_examples() {
        let s = scattering(FanBeamPoint::new(0.0, 0.0), true);
        assert_abs_diff_eq!(s.beta, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-15);
        let s = scattering(FanBeamPoint::new(0.0, PI / 6.0), false);
        assert_abs_diff_eq!(s.beta, 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.alpha, 5.0 * PI / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn footpoint_examples() {
        let f = footpoint(C64::new(0.0, 0.0), 0.9).unwrap();
        assert_abs_diff_eq!(f.beta, 0.9 + PI, epsilon = 1e-14);
        assert_abs_diff_eq!(f.alpha, 0.0, epsilon = 1e-15);
        let f = footpoint(C64::new(0.5, 0.0), PI / 2.0).unwrap();
        assert_abs_diff_eq!(f.beta, TAU - PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.alpha, -PI / 6.0, epsilon = 1e-14);
        let p = FanBeamPoint::new(2.0, -0.3);
        let f = footpoint(p.base(), p.theta()).unwrap();
        assert_abs_diff_eq!(f.beta, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.alpha, -0.3, epsilon = 1e-14);
    }

    #[test]
    fn santalo_examples() {
        let g = BoundaryGrid::new(64, 64).unwrap();
        let q = ChordQuadrature::new(0.05, 4);
        let one = santalo_integrate(|_, _| C64::new(1.0, 0.0), g, &q);
        assert!((one.re - 2.0 * PI * PI).abs() < 1e-3);
        let r2 = santalo_integrate(|x, _| C64::new(x.norm_sqr(), 0.0), g, &q);
        assert!((r2.re - PI * PI).abs() < 1e-3);
        let odd = santalo_integrate(|_, th| C64::from_polar(1.0, th), g, &q);
        assert!(odd.norm() < 1e-10);
    }

    #[test]
    fn cumulative_matches_exact() {
        let q = ChordQuadrature::new(0.1, 4);
        let ch = q.segment(FanBeamPoint::new(0.0, 0.2), 1.7);
        let g: Vec<C64> = ch.t.iter().map(|t| C64::new(t.cos(), 0.0)).collect();
        let c = q.cumulative(&ch, &g);
        for (t, v) in ch.t.iter().zip(&c) {
            assert!((v.re - t.sin()).abs() < 1e-9);
        }
        assert!((q.integrate(&ch, &g).re - 1.7f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn flow_extension_of_constant_and_trace() {
        let g = BoundaryGrid::new(64, 64).unwrap();
        let h = BoundaryField::from_fn_plus(g, |_, _| C64::new(1.0, 0.0));
        assert!((flow_extend(&h, C64::new(0.3, -0.4), 2.0).unwrap() - 1.0).norm() < 1e-12);
        // (h_ψ)|∂SM = A₊h for smooth h
        let h = BoundaryField::from_fn_plus(g, |b, a| C64::new((b).cos() * (a.cos()).powi(2), a.sin() * a.cos()));
        let ext = h.scatter_extend(1.0);
        let fe = FlowExtension::new(&h);
        for (b, a) in [(0.3, 2.0), (1.0, -2.5), (4.0, 0.3)] {
            let p = FanBeamPoint::new(b, a);
            let v = fe.eval(p.base() * (1.0 - 1e-14), p.theta());
            assert!((v - ext.eval(b, a)).norm() < 1e-6, "{v} vs {}", ext.eval(b, a));
        }
    }

    #[test]
    fn flow_perp_matches_difference_quotient() {
        let g = BoundaryGrid::new(128, 128).unwrap();
        let h = BoundaryField::from_fn_plus(g, |b, a| C64::new((2.0 * b).sin() * a.cos().powi(3), a.cos().powi(2)));
        let fe = FlowExtension::new(&h);
        let fp = FlowExtensionPerp::new(&h);
        let (x, th) = (C64::new(0.2, 0.35), 1.1f64);
        let vp = C64::new(th.sin(), -th.cos());
        let e = 1e-4;
        let fd = (fe.eval(x + vp * e, th) - fe.eval(x - vp * e, th)) / (2.0 * e);
        assert!((fd - fp.eval(x, th)).norm() < 1e-5, "{fd} {}", fp.eval(x, th));
    }

    proptest! {
        #[test]
        fn footpoint_constant_along_chord(b in 0.0..TAU, a in -1.5f64..1.5, s in 0.0f64..1.0) {
            let p = FanBeamPoint::new(b, a);
            let x = p.base() + p.direction() * (s * p.chord_length());
            let f = footpoint_unchecked(x, p.theta());
            prop_assert!((C64::from_polar(1.0, f.beta) - p.base()).norm() < 1e-10);
            prop_assert!((f.alpha - a).abs() < 1e-10);
        }

        #[test]
        fn exit_times_sum_to_chord(r in 0.0f64..0.999, phi in 0.0..TAU, th in 0.0..TAU) {
            let x = C64::from_polar(r, phi);
            let (_, s) = chord_coords(x, th);
            let total = exit_time_unchecked(x, th) + exit_time_unchecked(x, th + PI);
            prop_assert!((total - 2.0 * (1.0 - s * s).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn scattering_is_involution(b in 0.0..TAU, a in 0.0..TAU) {
            let p = FanBeamPoint::new(b, a);
            for anti in [false, true] {
                let q = scattering(scattering(p, anti), anti);
                prop_assert!((C64::from_polar(1.0, q.beta) - C64::from_polar(1.0, b)).norm() < 1e-12);
                prop_assert!((C64::from_polar(1.0, q.alpha) - C64::from_polar(1.0, a)).norm() < 1e-12);
            }
        }
    }
}
