//! simulate → gauge_reduce → recon_full → metrics, plus convergence tables.

use super::config::ExperimentConfig;
use super::io::{save_disc, save_representative, save_sinogram};
use super::phantom::{phantom_make, Phantom};
use super::plot::plot_field;
use crate::error::Result;
use crate::fields::{DiscField, C64};
use crate::gauge::{gauge_reduce, GaugeRepresentative};
use crate::reconstruction::{fbp_unattenuated, recon_full_with, FbpKind, Reconstruction};
use crate::special_solutions::{z_k, ukk_over_cos};
use crate::transport::{sup_abs, xray_attenuated, xray_i0, Discretization, Sinogram};
use serde_json::{json, Value};
use std::time::Instant;

/// Relative L² error of one component over the interior mask and the whole disc.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentError {
    pub name: String,
    pub interior: f64,
    pub full: f64,
}

/// A named measurement against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, pass: value <= tol }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub config: ExperimentConfig,
    pub a_inf: f64,
    pub errors: Vec<ComponentError>,
    /// ‖I_a g_rec − data‖/‖data‖ (0 when the data vanish).
    pub data_residual: f64,
    /// Per peeling stage: (k, ‖ℐ_k‖, ‖ℐ_{k−1}‖).
    pub stage_norms: Vec<(i32, f64, f64)>,
    pub cauchy_residual: (f64, f64),
    pub timings: Vec<(String, f64)>,
    pub verdicts: Vec<Verdict>,
}

impl ReconstructionReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Everything except wall-clock timings, which alone vary between runs.
    pub fn to_json(&self) -> Value {
        json!({
            "config": self.config.to_key_values().0,
            "a_inf": self.a_inf,
            "errors": self.errors.iter().map(|e| json!({"component": e.name, "interior": e.interior, "full": e.full})).collect::<Vec<_>>(),
            "data_residual": self.data_residual,
            "stages": self.stage_norms.iter().map(|(k, b, a)| json!({"k": k, "data_norm_before": b, "data_norm_after": a})).collect::<Vec<_>>(),
            "cauchy_residual": [self.cauchy_residual.0, self.cauchy_residual.1],
            "verdicts": self.verdicts.iter().map(|v| json!({"name": v.name, "value": v.value, "tol": v.tol, "pass": v.pass})).collect::<Vec<_>>(),
            "passed": self.passed(),
        })
    }

    pub fn timings_json(&self) -> Value {
        Value::Object(self.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
    }
}

/// Per-component relative errors. Components whose reference is negligible are measured
/// against the largest reference component instead.
pub fn compare_representatives(rec: &GaugeRepresentative, truth: &GaugeRepresentative, rho_mask: f64) -> Vec<ComponentError> {
    let ours = rec.components();
    let theirs = truth.components();
    let zero = DiscField::zeros(truth.grid(), "0");
    let n = ours.len().max(theirs.len());
    let get = |v: &Vec<(String, &DiscField)>, i: usize| v.get(i).map(|(_, f)| (*f).to_grid_only()).unwrap_or_else(|| zero.clone());
    let scale_in = theirs.iter().map(|(_, f)| f.masked_norm_sq(rho_mask).sqrt()).fold(0.0, f64::max);
    let scale_full = theirs.iter().map(|(_, f)| f.norm()).fold(0.0, f64::max);
    (0..n)
        .map(|i| {
            let name = ours.get(i).or(theirs.get(i)).map(|(s, _)| s.clone()).unwrap_or_default();
            let (a, b) = (get(&ours, i), get(&theirs, i));
            let d = a.sub(&b);
            let rel = |num: f64, den: f64, scale: f64| {
                if den > 1e-8 * scale {
                    num / den
                } else if scale > 0.0 {
                    num / scale
                } else {
                    num
                }
            };
            ComponentError {
                name,
                interior: rel(d.masked_norm_sq(rho_mask).sqrt(), b.masked_norm_sq(rho_mask).sqrt(), scale_in),
                full: rel(d.norm(), b.norm(), scale_full),
            }
        })
        .collect()
}

/// Outcome of one experiment with the objects behind the report.
pub struct ExperimentRun {
    pub report: ReconstructionReport,
    pub phantom: Phantom,
    pub sinogram: Sinogram,
    pub truth: GaugeRepresentative,
    pub recon: Reconstruction,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ReconstructionReport> {
    Ok(run_experiment_full(config)?.report)
}

pub fn run_experiment_full(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let disc = config.discretization()?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };
    let phantom = phantom_make(&config.phantom, &disc.pgrid)?;
    let m = config.phantom.m;
    let sinogram = xray_attenuated(&phantom.f, &phantom.a, &disc.forward);
    let sinogram = Sinogram { m, ..sinogram };
    lap("simulate", &mut timings);
    let truth = match &phantom.truth {
        Some(t) => t.clone(),
        None => gauge_reduce(&phantom.f, &phantom.a)?,
    };
    lap("gauge", &mut timings);
    let recon = recon_full_with(&sinogram.data, m, &phantom.a, &disc, config.residual_path)?;
    lap("reconstruct", &mut timings);
    let refit = xray_attenuated(&recon.rep.reassemble(), &phantom.a, &disc.forward).data;
    let dn = sinogram.data.norm_plus();
    let data_residual = if dn > 0.0 { refit.sub(&sinogram.data).norm_plus() / dn } else { refit.norm_plus() };
    lap("refit", &mut timings);
    timings.push(("factors".into(), recon.factor_seconds));
    timings.push(("bulk".into(), recon.bulk_seconds));
    for s in &recon.peel.stages {
        timings.push((format!("peel_{}", s.k), s.seconds));
    }
    let errors = compare_representatives(&recon.rep, &truth, config.rho_mask);
    let mut verdicts: Vec<Verdict> =
        errors.iter().map(|e| Verdict::at_most(format!("{} interior rel L2", e.name), e.interior, config.tol)).collect();
    verdicts.push(Verdict::at_most("data residual", data_residual, config.tol));
    let report = ReconstructionReport {
        config: config.clone(),
        a_inf: sup_abs(&phantom.a),
        errors,
        data_residual,
        stage_norms: recon.peel.stages.iter().map(|s| (s.k, s.data_norm_before, s.data_norm_after)).collect(),
        cauchy_residual: recon.bulk.cauchy_residual,
        timings,
        verdicts,
    };
    let run = ExperimentRun { report, phantom, sinogram, truth, recon };
    if let Some(dir) = &config.output_dir {
        write_artifacts(dir, &run)?;
    }
    Ok(run)
}

pub fn write_artifacts(dir: &std::path::Path, run: &ExperimentRun) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), run.report.config.to_key_values().render())?;
    save_sinogram(&dir.join("sinogram.atf"), &run.sinogram)?;
    save_disc(&dir.join("attenuation.atf"), &run.phantom.a)?;
    save_representative(&dir.join("truth"), &run.truth)?;
    save_representative(&dir.join("reconstruction"), &run.recon.rep)?;
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    for ((name, rec), (_, tru)) in run.recon.rep.components().iter().zip(run.truth.components()) {
        let stem = name.replace('+', "p").replace('-', "m");
        plot_field(&plots, &stem, rec, 128)?;
        plot_field(&plots, &format!("{stem}_err"), &rec.to_grid_only().sub(&tru.to_grid_only()), 128)?;
    }
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json");
    std::fs::write(dir.join("report.json"), pretty(&run.report.to_json()))?;
    std::fs::write(dir.join("timings.json"), pretty(&run.report.timings_json()))?;
    Ok(())
}

/// What a convergence study measures at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    /// Full pipeline component errors.
    Pipeline,
    /// ‖I₀Z_k − ((−1)^k/√(k+1))u'_{k,k}‖/‖·‖ as the chord step shrinks on a fixed fan-beam grid.
    ForwardZk(u32),
    /// Unattenuated FBP of a Gaussian bump.
    FbpBump,
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n_beta: usize,
    pub n_alpha: usize,
    pub h_t: f64,
    /// Mean panel width over the ∂₊ rays; panel counts are rounded up per chord, so this
    /// does not halve exactly with h_t.
    pub step: f64,
    pub k_max: i32,
    pub errors: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// log(e_i / e_{i+1}) / log(step_i / step_{i+1}) per quantity between consecutive rows.
    pub fn orders(&self) -> Vec<Vec<(String, f64)>> {
        self.rows
            .windows(2)
            .map(|w| {
                let r = (w[0].step / w[1].step).ln();
                w[0].errors.iter().zip(&w[1].errors).map(|((n, a), (_, b))| (n.clone(), (a / b).ln() / r)).collect()
            })
            .collect()
    }

    /// Slope of log error against log step between the first and last rows.
    pub fn overall_orders(&self) -> Vec<(String, f64)> {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if self.rows.len() > 1 => {
                let r = (a.step / b.step).ln();
                a.errors.iter().zip(&b.errors).map(|((n, x), (_, y))| (n.clone(), (x / y).ln() / r)).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let names: Vec<String> = self.rows.first().map(|r| r.errors.iter().map(|e| e.0.clone()).collect()).unwrap_or_default();
        out.push_str(&format!("{:>7} {:>7} {:>10} {:>10} {:>5}", "n_beta", "n_alpha", "h_t", "step", "k_max"));
        for n in &names {
            out.push_str(&format!(" {n:>12}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:>7} {:>7} {:>10.3e} {:>10.3e} {:>5}", r.n_beta, r.n_alpha, r.h_t, r.step, r.k_max));
            for (_, e) in &r.errors {
                out.push_str(&format!(" {e:>12.3e}"));
            }
            out.push('\n');
        }
        for (i, o) in self.orders().iter().enumerate() {
            out.push_str(&format!("order {}→{}:", i, i + 1));
            for (n, v) in o {
                out.push_str(&format!(" {n}={v:.2}"));
            }
            out.push('\n');
        }
        out.push_str("overall:");
        for (n, v) in self.overall_orders() {
            out.push_str(&format!(" {n}={v:.2}"));
        }
        out.push('\n');
        out
    }
}

fn forward_zk_error(k: u32, disc: &Discretization) -> f64 {
    let g = &disc.pgrid;
    let zk = DiscField::analytic(g, "Zk", move |z| z_k(k, z));
    let zero = DiscField::zeros(g, "0");
    let num = xray_i0(&zk, &zero, &disc.forward);
    let c = if k % 2 == 0 { 1.0 } else { -1.0 } / ((k + 1) as f64).sqrt();
    let exact = num.map_with_coords(move |b, a, _| ukk_over_cos(k, b, a) * a.cos() * c).restrict_plus();
    num.sub(&exact).norm_plus() / exact.norm_plus()
}

fn fbp_bump_error(disc: &Discretization) -> Result<f64> {
    let g = &disc.pgrid;
    let bump = DiscField::analytic(g, "bump", |z| C64::new((-(z - 0.2).norm_sqr() / (2.0 * 0.2 * 0.2)).exp(), 0.0));
    let zero = DiscField::zeros(g, "0");
    let rec = fbp_unattenuated(&xray_i0(&bump, &zero, &disc.forward), FbpKind::RcI0, g)?;
    Ok(rec.rel_error(&bump, 0.9))
}

fn mean_panel_width(disc: &Discretization) -> f64 {
    let g = disc.bgrid();
    let q = disc.quad();
    let widths: Vec<f64> = g
        .plus_range()
        .map(|j| {
            let len = 2.0 * g.alpha(j).cos();
            len / q.panels(len) as f64
        })
        .collect();
    widths.iter().sum::<f64>() / widths.len() as f64
}

/// Levels run from the coarsest (config refined by 1 − levels) to the config itself.
pub fn convergence_study(config: &ExperimentConfig, levels: usize, study: Study) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(crate::AtrtError::InvalidArgument("a convergence study needs at least two levels".into()));
    }
    let mut rows = Vec::new();
    for l in 0..levels {
        let mut c = config.refined(l as i32 + 1 - levels as i32);
        if let Study::ForwardZk(_) = study {
            // only the chord step varies
            c = ExperimentConfig { h_t: c.h_t, ..config.clone() };
        }
        let disc = c.discretization()?;
        let errors = match study {
            Study::Pipeline => {
                let c = ExperimentConfig { output_dir: None, ..c.clone() };
                run_experiment(&c)?.errors.into_iter().map(|e| (e.name, e.interior)).collect()
            }
            Study::ForwardZk(k) => vec![(format!("I0Z{k}"), forward_zk_error(k, &disc))],
            Study::FbpBump => vec![("rcI0".to_string(), fbp_bump_error(&disc)?)],
        };
        let step = mean_panel_width(&disc);
        rows.push(ConvergenceRow { n_beta: c.n_beta, n_alpha: c.n_alpha, h_t: c.h_t, step, k_max: c.k_max, errors });
    }
    Ok(ConvergenceTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::phantom::{AttenuationSpec, PhantomKind};

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default().refined(-2);
        c.n_rho = 16;
        c.k_max = 8;
        c
    }

    #[test]
    fn zero_phantom_gives_zero_report() {
        let mut c = small();
        c.phantom.kind = PhantomKind::Zero;
        c.phantom.attenuation = AttenuationSpec::constant(C64::new(0.3, 0.1));
        let r = run_experiment(&c).unwrap();
        assert!(r.errors.iter().all(|e| e.interior == 0.0 && e.full == 0.0));
        assert_eq!(r.data_residual, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn forward_convergence_order() {
        // two-point panels are exact to degree 3 only, so Z₅ exposes the h⁴ rate
        let mut c = ExperimentConfig::default().refined(-2);
        c.h_t = 1.0 / 32.0;
        c.quad_order = 2;
        let t = convergence_study(&c, 3, Study::ForwardZk(5)).unwrap();
        assert!(t.overall_orders()[0].1 >= 4.0, "{}", t.render());
    }

    #[test]
    fn report_json_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small();
        c.phantom.m = 1;
        c.output_dir = Some(dir.path().to_path_buf());
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(dir.path().join("reconstruction/manifest.txt").exists());
        assert!(dir.path().join("plots/g0_abs.png").exists());
    }
}
