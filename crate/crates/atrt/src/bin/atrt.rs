//! Command-line driver: simulate, gauge, reconstruct, fbp, verify, spectrum, convergence.
//!
//! Every command exits 0 iff all of its verdicts pass.

use anyhow::{bail, Context, Result};
use atrt::boundary_ops::spectral_table;
use atrt::fields::BoundaryGrid;
use atrt::gauge::{gauge_reduce_audited, stability_check};
use atrt::harness::acceptance::{run_criterion, TITLES};
use atrt::harness::config::{ExperimentConfig, KeyValues};
use atrt::harness::experiment::{
    compare_representatives, convergence_study, run_experiment_full, ReconstructionReport, Study, Verdict,
};
use atrt::harness::io::{
    load_disc, load_representative, load_sinogram, save_csv, save_disc, save_representative, save_sinogram,
};
use atrt::harness::phantom::phantom_make;
use atrt::harness::plot::plot_field;
use atrt::reconstruction::{fbp_unattenuated, recon_full_with, FbpKind, ResidualPath};
use atrt::transport::{sup_abs, xray_attenuated, Sinogram};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "atrt", version, about = "Attenuated X-ray transform of tensor fields on the unit disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key = value configuration file
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// m2-complex-a, m0-bump or zero
    #[arg(long)]
    preset: Option<String>,
    /// Overrides as key=value, applied after the file or preset
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut kv = match (&self.config, &self.preset) {
            (Some(p), _) => KeyValues::load(p)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?.to_key_values(),
            (None, None) => ExperimentConfig::default().to_key_values(),
        };
        for o in &self.overrides {
            let (k, v) = o.split_once('=').with_context(|| format!("override {o:?} is not key=value"))?;
            kv.0.insert(k.trim().to_string(), v.trim().to_string());
        }
        let cfg = ExperimentConfig::from_key_values(&kv)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Series,
    Fast,
    Slow,
}

impl From<PathArg> for ResidualPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Series => ResidualPath::Series,
            PathArg::Fast => ResidualPath::Fast,
            PathArg::Slow => ResidualPath::Slow,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FbpArg {
    Rci0,
    Rciperp,
}

#[derive(Subcommand)]
enum Command {
    /// Build a phantom and write its sinogram, attenuation and true representative
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduce the phantom to its gauge representative and check the stability budget
    Gauge {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct from a `simulate` directory, or run a whole experiment from a configuration
    Reconstruct {
        /// Directory written by `simulate`
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        path: Option<PathArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unattenuated filtered backprojection of a sinogram file
    Fbp {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "rci0")]
        kind: FbpArg,
        #[arg(long, default_value_t = 32)]
        n_rho: usize,
        #[arg(long, default_value_t = 64)]
        n_theta: usize,
        /// ATF1 output, or CSV when the name ends in .csv
        #[arg(long)]
        out: PathBuf,
        /// Also write |f| and arg f heatmaps next to the output
        #[arg(long)]
        plot: bool,
    },
    /// Run acceptance criteria (all by default)
    Verify {
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Compare compositional boundary operators with their closed-form action
    Spectrum {
        #[arg(long, default_value_t = 8)]
        n: i64,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error table over successive refinements
    Convergence {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// pipeline, fbp-bump or forward-zk:K
        #[arg(long, default_value = "pipeline")]
        study: String,
        /// Minimum overall observed order required to pass
        #[arg(long)]
        min_order: Option<f64>,
    },
}

fn print_verdicts(verdicts: &[Verdict]) -> bool {
    for v in verdicts {
        println!("{} {}: {:.3e} (tol {:.1e})", if v.pass { "PASS" } else { "FAIL" }, v.name, v.value, v.tol);
    }
    verdicts.iter().all(|v| v.pass)
}

fn simulate(cfg: ExperimentConfig, out: &Path) -> Result<bool> {
    let disc = cfg.discretization()?;
    let p = phantom_make(&cfg.phantom, &disc.pgrid)?;
    let s = xray_attenuated(&p.f, &p.a, &disc.forward);
    let s = Sinogram { m: cfg.phantom.m, ..s };
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.txt"), cfg.to_key_values().render())?;
    save_sinogram(&out.join("sinogram.atf"), &s)?;
    save_disc(&out.join("attenuation.atf"), &p.a)?;
    let truth = match p.truth {
        Some(t) => t,
        None => gauge_reduce_audited(&p.f, &p.a)?.rep,
    };
    save_representative(&out.join("truth"), &truth)?;
    println!("wrote {} (N_β {}, N_α {}, a∞ {:.4}, m {})", out.display(), cfg.n_beta, cfg.n_alpha, s.a_inf, s.m);
    Ok(true)
}

fn gauge(cfg: ExperimentConfig, out: Option<&Path>) -> Result<bool> {
    let disc = cfg.discretization()?;
    let p = phantom_make(&cfg.phantom, &disc.pgrid)?;
    let red = gauge_reduce_audited(&p.f, &p.a)?;
    for s in &red.stages {
        println!(
            "stage m={}: ‖f_m‖² {:.4e}  ‖v‖² {:.4e}  ‖w‖² {:.4e}  ‖g_m‖² {:.4e}",
            s.m, s.f_m_norm_sq, s.v_norm_sq, s.w_norm_sq, s.g_m_norm_sq
        );
    }
    let b = stability_check(&p.f, &red.rep, &p.a);
    println!("budget: ‖g‖² = {:.4e} ≤ C·Σ = {:.4e} (C = {:.3}, a∞ = {:.3})", b.lhs, b.rhs, b.c, b.a_inf);
    if let Some(dir) = out {
        save_representative(dir, &red.rep)?;
        println!("wrote {}", dir.display());
    }
    Ok(print_verdicts(&[Verdict::at_most("stability budget ratio", b.lhs / b.rhs, 1.0 + b.slack)]))
}

fn report_summary(r: &ReconstructionReport) -> bool {
    println!("a∞ = {:.4}", r.a_inf);
    for (k, before, after) in &r.stage_norms {
        println!("peel k={k}: ‖ℐ‖ {before:.4e} → {after:.4e}");
    }
    for e in &r.errors {
        println!("{:>4}: interior {:.3e}  full {:.3e}", e.name, e.interior, e.full);
    }
    for (name, t) in &r.timings {
        println!("time {name}: {t:.2} s");
    }
    print_verdicts(&r.verdicts)
}

fn reconstruct_dir(input: &Path, path: Option<PathArg>, out: Option<&Path>) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&input.join("config.txt"))?;
    if let Some(p) = path {
        cfg.residual_path = p.into();
    }
    let disc = cfg.discretization()?;
    let s = load_sinogram(&input.join("sinogram.atf"))?;
    if s.data.grid() != disc.bgrid() {
        bail!("sinogram grid {:?} disagrees with config grid {:?}", s.data.grid(), disc.bgrid());
    }
    let a = load_disc(&input.join("attenuation.atf"), Some(&disc.pgrid))?;
    if a.grid().n_rho() != disc.pgrid.n_rho() || a.grid().n_beta() != disc.pgrid.n_beta() {
        bail!("attenuation grid disagrees with config");
    }
    let t = Instant::now();
    let rec = recon_full_with(&s.data, s.m, &a, &disc, cfg.residual_path)?;
    let seconds = t.elapsed().as_secs_f64();
    let refit = xray_attenuated(&rec.rep.reassemble(), &a, &disc.forward).data;
    let dn = s.data.norm_plus();
    let residual = if dn > 0.0 { refit.sub(&s.data).norm_plus() / dn } else { refit.norm_plus() };
    let mut verdicts = vec![Verdict::at_most("data residual", residual, cfg.tol)];
    let truth_dir = input.join("truth");
    let errors = if truth_dir.join("manifest.txt").exists() {
        compare_representatives(&rec.rep, &load_representative(&truth_dir)?, cfg.rho_mask)
    } else {
        Vec::new()
    };
    for e in &errors {
        println!("{:>4}: interior {:.3e}  full {:.3e}", e.name, e.interior, e.full);
        verdicts.push(Verdict::at_most(format!("{} interior rel L2", e.name), e.interior, cfg.tol));
    }
    println!("a∞ = {:.4}, reconstruction {seconds:.2} s", sup_abs(&a));
    let report = ReconstructionReport {
        config: cfg,
        a_inf: sup_abs(&a),
        errors,
        data_residual: residual,
        stage_norms: rec.peel.stages.iter().map(|s| (s.k, s.data_norm_before, s.data_norm_after)).collect(),
        cauchy_residual: rec.bulk.cauchy_residual,
        timings: vec![("reconstruct".into(), seconds)],
        verdicts,
    };
    if let Some(dir) = out {
        save_representative(&dir.join("reconstruction"), &rec.rep)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report.to_json())?)?;
        println!("wrote {}", dir.display());
    }
    Ok(print_verdicts(&report.verdicts))
}

fn fbp(input: &Path, kind: FbpArg, n_rho: usize, n_theta: usize, out: &Path, plot: bool) -> Result<bool> {
    let s = load_sinogram(input)?;
    let grid = atrt::fields::PolarGrid::new(n_rho, n_theta)?;
    let kind = match kind {
        FbpArg::Rci0 => FbpKind::RcI0,
        FbpArg::Rciperp => FbpKind::RcIperp,
    };
    let f = fbp_unattenuated(&s.data, kind, &grid)?;
    if out.extension().is_some_and(|e| e == "csv") {
        save_csv(out, &[n_rho, n_theta], f.values())?;
    } else {
        save_disc(out, &f)?;
    }
    if plot {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("fbp");
        plot_field(dir, stem, &f, 128)?;
    }
    println!("wrote {}", out.display());
    Ok(true)
}

fn verify(criteria: &[u8]) -> Result<bool> {
    let ids: Vec<u8> = if criteria.is_empty() { (1..=TITLES.len() as u8).collect() } else { criteria.to_vec() };
    let mut all = true;
    for id in ids {
        let r = run_criterion(id)?;
        println!("{r}");
        all &= r.pass;
    }
    Ok(all)
}

fn spectrum(n: i64, grid: usize, tol: f64, out: Option<&Path>) -> Result<bool> {
    let rows = spectral_table(BoundaryGrid::new(grid, grid)?, n);
    let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    if let Some(p) = out {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
        writeln!(w, "op,input,output,oracle_re,oracle_im,error")?;
        for r in &rows {
            writeln!(w, "{:?},{:?},{:?},{:e},{:e},{:e}", r.op, r.input, r.output, r.oracle.re, r.oracle.im, r.error)?;
        }
        w.flush()?;
    }
    println!("{} rows", rows.len());
    Ok(print_verdicts(&[Verdict::at_most("max spectral-table error", worst, tol)]))
}

fn parse_study(s: &str) -> Result<Study> {
    Ok(match s {
        "pipeline" => Study::Pipeline,
        "fbp-bump" => Study::FbpBump,
        _ => match s.strip_prefix("forward-zk:") {
            Some(k) => Study::ForwardZk(k.parse().with_context(|| format!("bad k in {s:?}"))?),
            None => bail!("unknown study {s:?}"),
        },
    })
}

fn convergence(cfg: ExperimentConfig, levels: usize, study: &str, min_order: Option<f64>) -> Result<bool> {
    let table = convergence_study(&cfg, levels, parse_study(study)?)?;
    print!("{}", table.render());
    let overall = table.overall_orders();
    for (name, p) in &overall {
        println!("overall order {name}: {p:.2}");
    }
    let verdicts: Vec<Verdict> = match min_order {
        Some(min) => overall
            .iter()
            .map(|(name, p)| Verdict { name: format!("{name} order"), value: *p, tol: min, pass: *p >= min })
            .collect(),
        None => Vec::new(),
    };
    Ok(print_verdicts(&verdicts))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { cfg, out } => simulate(cfg.load()?, &out),
        Command::Gauge { cfg, out } => gauge(cfg.load()?, out.as_deref()),
        Command::Reconstruct { input: Some(dir), path, out, .. } => reconstruct_dir(&dir, path, out.as_deref()),
        Command::Reconstruct { input: None, cfg, path, out } => {
            let mut c = cfg.load()?;
            if let Some(p) = path {
                c.residual_path = p.into();
            }
            if out.is_some() {
                c.output_dir = out;
            }
            let run = run_experiment_full(&c)?;
            if let Some(dir) = &c.output_dir {
                println!("wrote {}", dir.display());
            }
            Ok(report_summary(&run.report))
        }
        Command::Fbp { input, kind, n_rho, n_theta, out, plot } => fbp(&input, kind, n_rho, n_theta, &out, plot),
        Command::Verify { criteria } => verify(&criteria),
        Command::Spectrum { n, grid, tol, out } => spectrum(n, grid, tol, out.as_deref()),
        Command::Convergence { cfg, levels, study, min_order } => convergence(cfg.load()?, levels, &study, min_order),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
