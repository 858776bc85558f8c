use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use masersync::check::run_checks;
use masersync::config::{Axis, Measures, SweepConfig};
use masersync::error::{CliError, CliResult};
use masersync::output::{emit_outputs, fmt_f64};
use masersync::sweep::{evaluate_point, run_sweep, SweepRow};
use masersync_core::params::{choose_truncation_capped, CouplingKind, CouplingSpec, MaserParams, Truncation};
use masersync_core::perturbation::{solve_first_order, solve_second_order_coherent};

/// Steady states and synchronization measures of two coupled micromasers.
#[derive(Parser)]
#[command(name = "masersync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One parameter point with every measure.
    Steady(Common),
    /// A parameter grid.
    Sweep(Common),
    /// Perturbative peak coefficients C0 (coherent) or C1 (dissipative).
    Perturb(Common),
    /// Invariant suite at small truncations.
    Check(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Atom injection rate.
    #[arg(long = "N")]
    n_atoms: Option<f64>,
    /// Pump parameter phi * sqrt(N).
    #[arg(long, conflicts_with = "phi")]
    theta: Option<f64>,
    /// Rabi angle.
    #[arg(long)]
    phi: Option<f64>,
    /// Coupling strength.
    #[arg(long)]
    eps: Option<f64>,
    /// coherent or dissipative.
    #[arg(long)]
    coupling: Option<CouplingKind>,
    /// Fixed Fock truncation per mode.
    #[arg(long)]
    nmax: Option<usize>,
    /// Discarded tail mass of the uncoupled distribution.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Phase distribution output: a file for `steady`, a directory for `sweep`.
    #[arg(long = "dump-phase")]
    dump_phase: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> CliResult<SweepConfig> {
        let mut c = match &self.config {
            Some(path) => SweepConfig::from_path(path)?,
            None => SweepConfig::default(),
        };
        if let Some(n) = self.n_atoms {
            c.n_atoms = Axis::single(n);
        }
        if let Some(t) = self.theta {
            c.theta = Axis::single(t);
            c.phi = None;
        }
        if let Some(p) = self.phi {
            c.phi = Some(Axis::single(p));
        }
        if let Some(e) = self.eps {
            c.eps = Axis::single(e);
        }
        if let Some(k) = self.coupling {
            c.couplings = vec![k];
        }
        if let Some(n) = self.nmax {
            c.n_max = Some(n);
        }
        if let Some(t) = self.threshold {
            c.threshold = t;
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if let Some(o) = &self.out {
            c.output.csv = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn show(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "-".to_string())
}

fn steady(args: &Common) -> CliResult<bool> {
    let mut config = args.config()?;
    config.measures = Measures {
        s_quantum: true,
        s_perturb: true,
        s_semiclassical: true,
        mean_n: true,
        fano: true,
        mutual_info: true,
        log_negativity: true,
    };
    let point = config.grid()?[0];
    let row = evaluate_point(point, &config, args.dump_phase.is_some());
    print_report(&row);
    if let (Some(path), Some(dist)) = (&args.dump_phase, &row.phase) {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        dist.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(row.ok())
}

fn print_report(row: &SweepRow) {
    let p = &row.point;
    println!("coupling         {}", p.coupling);
    println!("N                {}", fmt_f64(p.n_atoms));
    println!("phi              {}", fmt_f64(p.phi));
    println!("theta            {}", fmt_f64(p.theta));
    println!("eps              {}", fmt_f64(p.eps));
    println!("n_max            {}", row.n_max.map(|n| n.to_string()).unwrap_or_else(|| "-".into()));
    println!("residual         {}", show(row.residual));
    println!("mean_n           {}", show(row.mean_n));
    println!("fano             {}", show(row.fano));
    println!("S_quantum        {}", show(row.s_quantum));
    println!("peak_location    {}", show(row.peak_location));
    println!("S_perturb        {}", show(row.s_perturb));
    println!("S_semiclassical  {}", show(row.s_semiclassical));
    println!("mutual_info      {}", show(row.mutual_info));
    println!("log_negativity   {}", show(row.log_negativity));
    for e in &row.errors {
        println!("error            {e}");
    }
}

fn perturb(args: &Common) -> CliResult<bool> {
    let config = args.config()?;
    let point = config.grid()?[0];
    let params = MaserParams::new(point.n_atoms, point.phi)?;
    let trunc = match config.n_max {
        Some(n) => Truncation::fixed(n)?,
        None => choose_truncation_capped(&params, config.threshold, config.hard_cap)?,
    };
    let coupling = CouplingSpec::new(point.coupling, point.eps)?;
    println!("coupling   {}", point.coupling);
    println!("theta      {}", fmt_f64(point.theta));
    println!("n_max      {}", trunc.n_max);
    match point.coupling {
        CouplingKind::Dissipative => {
            let st = solve_first_order(&coupling, &params, &trunc)?;
            let c1 = st.c1.unwrap_or(0.0);
            println!("C1         {}", fmt_f64(c1));
            println!("S_perturb  {}", fmt_f64(st.sync_strength(point.eps)));
            println!("peaks      {}", if c1 >= 0.0 { "0" } else { "pi" });
        }
        CouplingKind::Coherent => {
            let st = solve_second_order_coherent(&params, &trunc)?;
            let c0 = st.c0.unwrap_or(0.0);
            println!("C0         {}", fmt_f64(c0));
            println!("S_perturb  {}", fmt_f64(st.sync_strength(point.eps)));
            println!("peaks      {}", if c0 >= 0.0 { "0, pi" } else { "-pi/2, pi/2" });
        }
    }
    Ok(true)
}

fn sweep(args: &Common) -> CliResult<bool> {
    let mut config = args.config()?;
    if let Some(dir) = &args.dump_phase {
        config.output.phase_dir = Some(dir.clone());
    }
    let start = Instant::now();
    let rows = run_sweep(&config)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let written = emit_outputs(&rows, &config, wall)?;
    if config.output.csv.is_none() {
        print!("{}", masersync::output::render_csv(&rows, &config));
    }
    let failed = rows.iter().filter(|r| !r.ok()).count();
    eprintln!("{} points, {failed} failed, {:.0} ms", rows.len(), wall);
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(failed == 0)
}

fn check(args: &Common) -> CliResult<bool> {
    let n = args.n_atoms.unwrap_or(2.0);
    let theta = match (args.theta, args.phi) {
        (Some(t), _) => t,
        (None, Some(p)) => p * n.sqrt(),
        (None, None) => 1.5,
    };
    let results = run_checks(n, theta);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(results.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors share exit code 1 with configuration errors; 2 means failed points.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Steady(a) => steady(a),
        Command::Sweep(a) => sweep(a),
        Command::Perturb(a) => perturb(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e @ CliError::Core(_)) => {
            eprintln!("masersync: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("masersync: {e}");
            ExitCode::from(1)
        }
    }
}
