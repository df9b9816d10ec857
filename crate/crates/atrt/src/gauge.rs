//! The gauge representative g = g₀ + X⊥g_s + Σ_k g_k with the same attenuated transform as a
//! given tensor field, its stability budget and the truncation sequence for infinite content.

use crate::complex_calculus::{elliptic_split, poincare_constant, wirtinger, x_perp, Wirtinger};
use crate::error::{AtrtError, Result};
use crate::fields::{DiscField, FiberField, PolarGrid, C64};
use crate::transport::sup_abs;
use std::sync::Arc;

/// (g₀, g_s, g₁, …, g_m); `gk[k-1] = (g_{k,+}, g_{k,−})` with ∂̄g_{k,+} = 0 and ∂g_{k,−} = 0.
#[derive(Clone, Debug)]
pub struct GaugeRepresentative {
    pub g0: DiscField,
    pub gs: DiscField,
    pub gk: Vec<(DiscField, DiscField)>,
    pub m: i32,
}

impl GaugeRepresentative {
    pub fn zeros(grid: &Arc<PolarGrid>, m: i32) -> Self {
        let z = || DiscField::zeros(grid, "0");
        Self { g0: z(), gs: z(), gk: (0..m).map(|_| (z(), z())).collect(), m }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        self.g0.grid()
    }

    /// (g_{k,+}, g_{k,−}) for 1 ≤ k ≤ m.
    pub fn residual(&self, k: i32) -> Option<&(DiscField, DiscField)> {
        if k < 1 {
            return None;
        }
        self.gk.get(k as usize - 1)
    }

    /// g as a fiber field, X⊥g_s taken spectrally.
    pub fn reassemble(&self) -> FiberField {
        let k_max = self.m.max(1);
        let mut out = FiberField::zeros(self.grid(), k_max);
        out.accumulate(0, &self.g0).expect("mode 0");
        let xs = x_perp(&FiberField::from_disc(self.gs.clone(), 0));
        out = out.add(&xs);
        for (k, (p, n)) in self.gk.iter().enumerate() {
            let k = k as i32 + 1;
            out.accumulate(k, p).expect("within m");
            out.accumulate(-k, n).expect("within m");
        }
        out
    }

    /// Named components in a fixed order: g0, gs, g1+, g1−, g2+, …
    pub fn components(&self) -> Vec<(String, &DiscField)> {
        let mut v = vec![("g0".to_string(), &self.g0), ("gs".to_string(), &self.gs)];
        for (k, (p, n)) in self.gk.iter().enumerate() {
            v.push((format!("g{}+", k + 1), p));
            v.push((format!("g{}-", k + 1), n));
        }
        v
    }

    /// Per-component relative L² errors over ρ ≤ rho_max against a reference (absolute when the reference vanishes).
    pub fn component_errors(&self, reference: &GaugeRepresentative, rho_max: f64) -> Vec<(String, f64)> {
        let zero = DiscField::zeros(self.grid(), "0");
        let ours = self.components();
        let theirs = reference.components();
        let n = ours.len().max(theirs.len());
        (0..n)
            .map(|i| {
                let (name, a) = ours.get(i).map(|(s, f)| (s.clone(), *f)).unwrap_or_else(|| (theirs[i].0.clone(), &zero));
                let b = theirs.get(i).map(|(_, f)| *f).unwrap_or(&zero);
                let diff = a.to_grid_only().sub(&b.to_grid_only()).masked_norm_sq(rho_max).sqrt();
                let scale = b.to_grid_only().masked_norm_sq(rho_max).sqrt();
                (name, if scale > 0.0 { diff / scale } else { diff })
            })
            .collect()
    }

    /// ‖∂̄g_{k,+}‖ and ‖∂g_{k,−}‖ for every k.
    pub fn solenoidal_defects(&self) -> Vec<(f64, f64)> {
        self.gk
            .iter()
            .map(|(p, n)| (wirtinger(p, Wirtinger::Dbar).norm(), wirtinger(n, Wirtinger::Del).norm()))
            .collect()
    }
}

/// f_k = Xv_{k−1} + w_{k−2} + g_k for a degree-k pair.
#[derive(Clone, Debug)]
pub struct LemmaDecomp {
    pub k: i32,
    pub g_plus: DiscField,
    pub g_minus: DiscField,
    pub v_plus: DiscField,
    pub v_minus: DiscField,
    /// w_{k−2} in modes ±(k−2) (a single mode 0 when k = 2).
    pub w: FiberField,
}

impl LemmaDecomp {
    /// v_{k−1} = e^{i(k−1)θ}v₊ + e^{−i(k−1)θ}v₋.
    pub fn v(&self) -> FiberField {
        let mut out = FiberField::zeros(self.v_plus.grid(), self.k - 1);
        out.accumulate(self.k - 1, &self.v_plus).expect("range");
        out.accumulate(1 - self.k, &self.v_minus).expect("range");
        out
    }
    pub fn g(&self) -> FiberField {
        let mut out = FiberField::zeros(self.g_plus.grid(), self.k);
        out.accumulate(self.k, &self.g_plus).expect("range");
        out.accumulate(-self.k, &self.g_minus).expect("range");
        out
    }
}

/// f_{k,+} = ∂v₊ + g₊, f_{k,−} = ∂̄v₋ + g₋, w_{k−2,+} = −∂̄v₊, w_{k−2,−} = −∂v₋.
pub fn lemma_decomp(f_plus: &DiscField, f_minus: &DiscField, k: i32) -> Result<LemmaDecomp> {
    if k < 2 {
        return Err(AtrtError::InvalidArgument(format!("lemma_decomp needs k ≥ 2, got {k}")));
    }
    let sp = elliptic_split(f_plus, Wirtinger::Del)?;
    let sm = elliptic_split(f_minus, Wirtinger::Dbar)?;
    let mut w = FiberField::zeros(f_plus.grid(), k - 2);
    let neg = C64::new(-1.0, 0.0);
    w.accumulate(k - 2, &wirtinger(&sp.v, Wirtinger::Dbar).scale(neg))?;
    w.accumulate(2 - k, &wirtinger(&sm.v, Wirtinger::Del).scale(neg))?;
    Ok(LemmaDecomp { k, g_plus: sp.g, g_minus: sm.g, v_plus: sp.v, v_minus: sm.v, w })
}

/// Norms recorded while peeling degree m.
#[derive(Clone, Debug)]
pub struct GaugeStage {
    pub m: i32,
    pub f_m_norm_sq: f64,
    pub v_norm_sq: f64,
    pub w_norm_sq: f64,
    pub g_m_norm_sq: f64,
}

/// Representative together with the audit trail of the recursion.
#[derive(Clone, Debug)]
pub struct GaugeReduction {
    pub rep: GaugeRepresentative,
    pub stages: Vec<GaugeStage>,
}

pub fn gauge_reduce(f: &FiberField, a: &DiscField) -> Result<GaugeRepresentative> {
    Ok(gauge_reduce_audited(f, a)?.rep)
}

pub fn gauge_reduce_audited(f: &FiberField, a: &DiscField) -> Result<GaugeReduction> {
    let m = f.order();
    let grid = f.grid().clone();
    let mut rep = GaugeRepresentative::zeros(&grid, m);
    let mut stages = Vec::new();
    let mut h = f.clone();
    for deg in (2..=m).rev() {
        let d = lemma_decomp(&h.mode(deg), &h.mode(-deg), deg)?;
        let v = d.v();
        stages.push(GaugeStage {
            m: deg,
            f_m_norm_sq: h.degree_norm_sq(deg),
            v_norm_sq: v.parseval_norm_sq(),
            w_norm_sq: d.w.parseval_norm_sq(),
            g_m_norm_sq: d.g().parseval_norm_sq(),
        });
        // h := f' + w_{m−2} − a v_{m−1}
        let rest = h.truncate(deg - 1).with_k_max(deg - 1);
        h = rest.add(&d.w).sub(&v.mul_disc(a));
        rep.gk[deg as usize - 1] = (d.g_plus.named(&format!("g{deg}+")), d.g_minus.named(&format!("g{deg}-")));
    }
    if m >= 1 {
        let sp = elliptic_split(&h.mode(1), Wirtinger::Del)?;
        let sm = elliptic_split(&h.mode(-1), Wirtinger::Dbar)?;
        let half = C64::new(0.5, 0.0);
        let gp = sp.v.add(&sm.v).scale(half);
        let gs = sp.v.sub(&sm.v).scale(C64::new(0.0, 0.5));
        stages.push(GaugeStage {
            m: 1,
            f_m_norm_sq: h.degree_norm_sq(1),
            v_norm_sq: 2.0 * std::f64::consts::PI * gp.norm_sq(),
            w_norm_sq: 0.0,
            g_m_norm_sq: 2.0 * std::f64::consts::PI * (sp.g.norm_sq() + sm.g.norm_sq()),
        });
        rep.g0 = h.mode(0).to_grid_only().sub(&a.mul(&gp).to_grid_only()).named("g0");
        rep.gs = gs.named("gs");
        rep.gk[0] = (sp.g.named("g1+"), sm.g.named("g1-"));
    } else {
        rep.g0 = h.mode(0).named("g0");
    }
    Ok(GaugeReduction { rep, stages })
}

/// Both sides of the stability estimate for g = gauge_reduce(f, a).
#[derive(Clone, Debug)]
pub struct StabilityBudget {
    pub a_inf: f64,
    pub c: f64,
    /// Weighted terms of the right-hand side, one per degree.
    pub terms: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl StabilityBudget {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + self.slack) + 1e-300
    }
}

pub fn stability_check(f: &FiberField, g: &GaugeRepresentative, a: &DiscField) -> StabilityBudget {
    let a_inf = sup_abs(a);
    let cp = poincare_constant();
    let c = 4.0 + 8.0 * a_inf * a_inf * cp;
    let m = f.order().max(g.m);
    let fp: Vec<f64> = (0..=m).map(|p| f.degree_norm_sq(p)).collect();
    let terms: Vec<f64> = match m {
        0 => vec![fp[0]],
        1 => vec![2.0 * fp[0], (1.0 + 4.0 * a_inf * a_inf * cp) * fp[1]],
        _ => (0..=m)
            .map(|p| {
                let w = c.powi(p);
                if p <= m - 2 {
                    4.0 * w * fp[p as usize]
                } else if p == m - 1 {
                    2.0 * w * fp[p as usize]
                } else {
                    w * fp[p as usize]
                }
            })
            .collect(),
    };
    let rhs = terms.iter().sum();
    StabilityBudget { a_inf, c, terms, lhs: g.reassemble().parseval_norm_sq(), rhs, slack: 0.02 }
}

/// Gauge representatives of the truncations f^{(m)}, m = 0..=m_max, with Cauchy differences.
#[derive(Clone, Debug)]
pub struct TruncationStudy {
    pub reps: Vec<GaugeRepresentative>,
    /// ‖g^{(m+1)} − g^{(m)}‖ for consecutive truncations.
    pub differences: Vec<f64>,
    /// ‖g^{(m_max)}‖².
    pub last_norm_sq: f64,
    /// 4‖f‖²_C over the stored modes.
    pub bound: f64,
}

pub fn gauge_reduce_truncated(f: &FiberField, a: &DiscField, m_max: i32) -> Result<TruncationStudy> {
    let mut reps = Vec::new();
    let mut fields = Vec::new();
    for m in 0..=m_max {
        let fm = f.truncate(m).with_k_max(m.max(1));
        let g = gauge_reduce(&fm, a)?;
        fields.push(g.reassemble());
        reps.push(g);
    }
    let differences = fields.windows(2).map(|w| w[1].sub(&w[0]).parseval_norm()).collect();
    let a_inf = sup_abs(a);
    let c = 4.0 + 8.0 * a_inf * a_inf * poincare_constant();
    let bound = 4.0 * f.weighted_norm_sq(c);
    let last_norm_sq = fields.last().map(|g| g.parseval_norm_sq()).unwrap_or(0.0);
    Ok(TruncationStudy { reps, differences, last_norm_sq, bound })
}
