use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compliance_cli::config::{ConfigError, ExperimentConfig, OutputFormat};
use compliance_cli::report::{emit_report, ReportError, StudyReport};
use compliance_cli::study::StudyError;
use compliance_cli::{run_ablation_study, run_convergence_study, run_segment_scenario};
use compliance_core::oracle::{
    finite_difference_compliance, fit_modal_coefficients, solve_modal_equilibrium, solve_rod_bvp,
};
use compliance_core::{Pose, Rod, ShapeBasis, Wrench};
use nalgebra::Vector3;

#[derive(Parser)]
#[command(name = "compliance", version, about = "Modal compliance studies for continuum rods and segments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full compliance against the rod oracle over the order sweep.
    Converge(Common),
    /// Same protocol without the Jacobian-derivative term.
    Ablate(Common),
    /// Tendon segment tip-load scenario.
    Segment(Common),
    /// Analytic vs finite-difference compliance for a single tip wrench.
    RodDemo(Demo),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); the bundled 3^6 preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated basis orders, overriding the config.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    /// Magnus integration steps, overriding the config.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Demo {
    #[command(flatten)]
    common: Common,
    /// Tip force in newtons, world frame: fx,fy,fz.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 0.0], allow_negative_numbers = true)]
    force: Vec<f64>,
    /// Tip moment in newton metres, world frame: mx,my,mz.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    moment: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] StudyError),
    #[error("solver failure: {0}")]
    Core(#[from] compliance_core::Error),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Usage(_) => 1,
            Failure::Solver(_) | Failure::Core(_) => 2,
            Failure::Report(_) => 3,
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default_preset(),
    };
    if let Some(orders) = &common.orders {
        if orders.is_empty() {
            return Err(Failure::Usage("--orders needs at least one order".into()));
        }
        cfg.basis.orders = orders.clone();
    }
    if let Some(steps) = common.steps {
        if steps == 0 {
            return Err(Failure::Usage("--steps must be at least 1".into()));
        }
        cfg.basis.steps = steps;
        cfg.segment.steps = steps;
    }
    if let Some(dir) = &common.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    if let Some(f) = common.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        };
    }
    Ok(cfg)
}

fn summarize(report: &StudyReport) {
    println!("{:>5} {:>8} {:>14} {:>14} {:>14} {:>14} {:>12}", "order", "ok", "mean e_p mm", "max e_p mm", "mean rot deg", "max rot deg", "rate Hz");
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"));
    for a in &report.aggregates {
        println!(
            "{:>5} {:>8} {:>14} {:>14} {:>14} {:>14} {:>12}",
            a.order,
            format!("{}/{}", a.ok_rows, a.rows),
            show(a.mean_e_p_mm),
            show(a.max_e_p_mm),
            show(a.mean_rot_err_deg),
            show(a.max_rot_err_deg),
            a.throughput_hz.map_or_else(|| "-".to_string(), |x| format!("{x:.0}")),
        );
    }
    for (k, v) in &report.extras {
        println!("{k}: {v:.6}");
    }
    if !report.exclusions.is_empty() {
        println!("{} excluded entries (see JSON report)", report.exclusions.len());
    }
}

fn study(cfg: &ExperimentConfig, report: StudyReport) -> Result<(), Failure> {
    summarize(&report);
    for path in emit_report(&report, &cfg.output.dir, &report.study, cfg.output.format)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn demo(d: &Demo) -> Result<(), Failure> {
    if d.force.len() != 3 || d.moment.len() != 3 {
        return Err(Failure::Usage("--force and --moment take three comma-separated components".into()));
    }
    let cfg = load(&d.common)?;
    let props = cfg.rod.properties();
    let w = Wrench::new(
        Vector3::new(d.moment[0], d.moment[1], d.moment[2]),
        Vector3::new(d.force[0], d.force[1], d.force[2]),
    );
    let eq = solve_rod_bvp(&props, &w, &Pose::identity())?;
    let tip = eq.tip();
    println!("tip position (mm): {:.6?}", (tip.position * 1e3).as_slice());
    let fd = finite_difference_compliance(&props, &w, &eq, &cfg.increments.per_axis())?;
    println!("finite-difference compliance (oracle increments):{fd:.6e}");
    for &n in &cfg.basis.orders {
        let rod = Rod::new(ShapeBasis::uniform(n, cfg.rod.length)?, props, cfg.basis.steps)?;
        let fit = fit_modal_coefficients(&eq.curvature_samples(&props), rod.basis())?;
        let c = solve_modal_equilibrium(&rod, &w, &fit)?.config;
        let cm = rod.compliance(&c, &w)?;
        let rel = (cm.matrix - fd).norm() / fd.norm();
        println!("order {n:>2}: relative difference {rel:.3e}, condition {:.3e}", cm.condition);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Converge(c) => {
            let cfg = load(c)?;
            study(&cfg, run_convergence_study(&cfg)?)
        }
        Command::Ablate(c) => {
            let cfg = load(c)?;
            study(&cfg, run_ablation_study(&cfg)?)
        }
        Command::Segment(c) => {
            let cfg = load(c)?;
            study(&cfg, run_segment_scenario(&cfg)?)
        }
        Command::RodDemo(d) => demo(d),
    }
}

fn main() -> ExitCode {
    // Usage errors share the config-error code; clap's default of 2 would
    // collide with solver failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
