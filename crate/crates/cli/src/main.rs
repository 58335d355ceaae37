use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esa_core::engine::report::{trace_csv, write_metrics};
use esa_core::engine::{DEFAULT_HORIZON, SweepFits};
use esa_core::model::check_rate_properties;
use esa_core::oracle::{brute_force_bound, compute_upper_bound, DEFAULT_TOLERANCE};
use esa_core::{run, sweep, Error, Network, Policy, RunOptions};

/// Utility-optimal scheduling simulator for energy-harvesting networks.
#[derive(Parser, Debug)]
#[command(name = "esa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a config, print its derived parameters and any warnings.
    Validate(ValidateArgs),
    /// Simulate one policy for one V and seed.
    Run(RunArgs),
    /// Simulate a list of V values and seeds, in parallel, and fit scaling laws.
    Sweep(SweepArgs),
    /// Compute the numeric upper bound on achievable utility.
    Bound(BoundArgs),
    /// Check the rate function's structural properties on the action set.
    CheckModel(CheckModelArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Config file; `.toml` is appended when the bare path does not exist.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// V used for the derived constants; defaults to the config's value.
    #[arg(long)]
    v: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value = "esa")]
    policy: Policy,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Metrics file: JSON for a `.json` extension, CSV otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-slot queue trace (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record every n-th slot in the trace.
    #[arg(long, requires = "trace", default_value_t = 1)]
    trace_stride: u64,
    /// Phase I length for the two-phase policy.
    #[arg(long)]
    phase1_t: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value = "esa")]
    policy: Policy,
    /// Comma-separated V values.
    #[arg(long, value_delimiter = ',', required = true)]
    v_list: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    phase1_t: Option<u64>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Stop once the duality gap is below this.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Also run the grid brute force at this resolution (tiny instances only).
    #[arg(long)]
    grid_step: Option<f64>,
    /// Write the bound as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckModelArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Pairs examined; every pair is checked when there are at most this many.
    #[arg(long, default_value_t = 1 << 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_invariant() { 2 } else { 1 })
        }
    }
}

fn resolve(path: &Path) -> PathBuf {
    if !path.exists() {
        let mut with_ext = path.as_os_str().to_owned();
        with_ext.push(".toml");
        let with_ext = PathBuf::from(with_ext);
        if with_ext.exists() {
            return with_ext;
        }
    }
    path.to_path_buf()
}

fn load(arg: &ConfigArg) -> esa_core::Result<Network> {
    let path = resolve(&arg.config);
    let net = Network::from_path(&path)?;
    for w in net.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(net)
}

fn execute(cmd: Command) -> esa_core::Result<ExitCode> {
    match cmd {
        Command::Validate(a) => validate(a),
        Command::Run(a) => run_one(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Bound(a) => bound(a),
        Command::CheckModel(a) => check_model(a),
    }
}

fn validate(a: ValidateArgs) -> esa_core::Result<ExitCode> {
    let net = load(&a.config)?;
    let v = a.v.unwrap_or_else(|| net.default_v());
    let p = net.params(v)?;
    println!("config ok: {} nodes, {} links, {} commodities, {} destination classes", net.node_count(), net.link_count(), net.commodities().len(), net.class_count());
    println!("V = {}", p.v);
    println!("beta = {}, delta = {}, d_max = {}, mu_max = {}", p.beta, p.delta, p.d_max, p.mu_max);
    println!("R_max = {}, P_max = {}, h_max = {}", p.r_max, p.p_max, p.h_max);
    println!("gamma = {}", p.gamma);
    println!("theta = {:?}", p.theta);
    println!("Q bound = {}, E bound = {:?}", p.q_bound, p.e_bound);
    Ok(ExitCode::SUCCESS)
}

fn run_one(a: RunArgs) -> esa_core::Result<ExitCode> {
    let net = load(&a.config)?;
    let v = a.v.unwrap_or_else(|| net.default_v());
    let mut opts = RunOptions::new(a.policy, v, a.horizon, a.seed);
    opts.phase1_t = a.phase1_t;
    if a.trace.is_some() {
        opts.trace_stride = Some(a.trace_stride);
    }
    let out = run(&net, &opts)?;
    let m = &out.metrics;
    println!("policy {} V = {} seed = {} horizon = {}", m.policy.name(), m.v, m.seed, m.horizon);
    println!("utility          {:.6}", m.utility);
    println!("admitted utility {:.6}", m.utility_admitted);
    println!("rates            {:?}", m.net_rate);
    println!("average backlog  {:.3}", m.backlog_avg);
    println!("average energy   {:.3}", m.energy_avg);
    println!("max Q, max E     {}, {}", m.max_q, m.max_e);
    if let Some(cap) = m.capacity {
        println!("capacity M       {cap:.4}");
        println!("virtual backlog  {:.3}", m.virtual_backlog_avg.unwrap_or(0.0));
        println!("dropped          {} of {} admitted", m.dropped_total, m.admitted_total);
    }
    println!("violations       {}", m.violations);
    println!("wall clock       {:.3} s", out.wall_clock.as_secs_f64());
    if let Some(path) = &a.out {
        write_metrics(path, std::slice::from_ref(m), None)?;
    }
    if let Some(path) = &a.trace {
        std::fs::write(path, trace_csv(&net, &out.trace))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(a: SweepArgs) -> esa_core::Result<ExitCode> {
    let net = load(&a.config)?;
    let report = sweep(&net, a.policy, &a.v_list, a.horizon, &a.seeds, a.phase1_t)?;
    println!("{:>10} {:>6} {:>10} {:>12} {:>12} {:>10}", "V", "seed", "utility", "backlog", "energy", "dropped");
    for m in &report.rows {
        println!("{:>10} {:>6} {:>10.5} {:>12.3} {:>12.3} {:>10}", m.v, m.seed, m.utility, m.backlog_avg, m.energy_avg, m.dropped_total);
    }
    print_fits(&report.fits);
    if let Some(path) = &a.out {
        write_metrics(path, &report.rows, Some(&report.fits))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_fits(fits: &SweepFits) {
    let show = |name: &str, f: &Option<esa_core::engine::LinearFit>| {
        if let Some(f) = f {
            println!("{name}: slope {:.5}, intercept {:.3}, R^2 {:.4}", f.slope, f.intercept, f.r2);
        }
    };
    show("backlog vs V", &fits.backlog_vs_v);
    show("energy vs V", &fits.energy_vs_v);
    show("backlog vs (ln V)^2", &fits.backlog_vs_log2_v);
    show("virtual backlog vs V", &fits.virtual_backlog_vs_v);
}

fn bound(a: BoundArgs) -> esa_core::Result<ExitCode> {
    let net = load(&a.config)?;
    let b = compute_upper_bound(&net, a.tolerance)?;
    println!("bound {:.6}", b.bound);
    println!("utility at final rates {:.6}, gap {:.2e}, iterations {}{}", b.utility, b.gap, b.iterations, if b.converged { "" } else { " (iteration cap reached)" });
    println!("rates {:?}", b.rates);
    let brute = match a.grid_step {
        Some(step) => {
            let v = brute_force_bound(&net, step)?;
            println!("grid brute force (step {step}) {v:.6}");
            Some(v)
        }
        None => None,
    };
    if let Some(path) = &a.out {
        let json = serde_json::json!({ "bound": b, "brute_force": brute });
        let text = serde_json::to_string_pretty(&json).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn check_model(a: CheckModelArgs) -> esa_core::Result<ExitCode> {
    let net = load(&a.config)?;
    let report = check_rate_properties(net.rate(), net.actions(), net.channel_labels().len(), net.delta(), a.samples, a.seed);
    println!("channel and energy processes: ok");
    println!("{} checks ({}), max rate seen {}", report.checks, if report.exhaustive { "exhaustive" } else { "sampled" }, report.max_rate_seen);
    if report.passed() {
        println!("rate properties: ok");
        return Ok(ExitCode::SUCCESS);
    }
    for v in &report.violations {
        println!("violation {}: link {} channel {:?} power {:?}: {}", v.property, v.link + 1, v.channel, v.power, v.detail);
    }
    Ok(ExitCode::from(1))
}
