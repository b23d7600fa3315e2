use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use offpac::envs::{EnvKind, TabularMDP};
use offpac::features::TabularEncoding;
use offpac::harness::{
    aggregate, build_report, emit_report, read_raw_csv_file, render_summary, run_cells, run_sweep, write_csv, Algorithm,
    ExperimentConfig, SweepSpec,
};
use offpac::oracle;
use offpac::policies::GibbsPolicy;

#[derive(Parser)]
#[command(name = "offpac", version, about = "Off-policy actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seeded run of one configuration.
    Run(RunArgs),
    /// Run a hyperparameter grid.
    Sweep(SweepArgs),
    /// Select the best cells from a raw results file.
    Report(ReportArgs),
    /// Verify the exact tabular identities and gradient checks.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Base seed mixed into every run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV output.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    parallelism: Option<usize>,
}

/// Command-line overrides for configuration fields.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    config_id: Option<usize>,
    #[arg(long)]
    alpha_v: Option<f64>,
    #[arg(long)]
    alpha_w: Option<f64>,
    #[arg(long)]
    alpha_u: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    num_episodes: Option<usize>,
    #[arg(long)]
    num_runs: Option<usize>,
    #[arg(long)]
    eval_points: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        set!(env, algorithm, config_id, alpha_v, alpha_w, alpha_u, tau, lambda, gamma);
        set!(num_episodes, num_runs, eval_points, eval_episodes, max_steps);
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with configuration fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    overrides: Overrides,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with a `[base]` table and per-parameter value lists.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Raw results CSV written by `run` or `sweep`.
    #[arg(long)]
    input: PathBuf,
    /// Directory for `summary.csv` and `learning_curves.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Seed for the random parameter draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random policy parameters drawn per check.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

fn parallelism(p: Option<usize>) -> usize {
    p.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write_results(rows: &[offpac::harness::RawRow], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_csv(rows, std::fs::File::create(out_dir.join("raw.csv"))?)?;
    write_csv(&aggregate(rows), std::fs::File::create(out_dir.join("aggregate.csv"))?)?;
    Ok(())
}

fn print_aggregate(rows: &[offpac::harness::RawRow]) {
    println!("{:>6} {:>10} {:>16} {:>10} {:>5}", "config", "checkpoint", "mean_return", "stderr", "div");
    for a in aggregate(rows) {
        println!(
            "{:>6} {:>10} {:>16.3} {:>10.3} {:>5}",
            a.config_id, a.checkpoint, a.mean_return, a.stderr_return, a.diverged_runs
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if args.dry_run {
        print!("{}", cfg.to_toml_string());
        return Ok(ExitCode::SUCCESS);
    }
    let outcome = run_cells(std::slice::from_ref(&cfg), parallelism(args.common.parallelism), None)?;
    if let Some(dir) = &args.common.out_dir {
        write_results(&outcome.rows, dir)?;
    }
    print_aggregate(&outcome.rows);
    report_failures(&outcome.failures)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut spec = SweepSpec::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    args.overrides.apply(&mut spec.base);
    if let Some(seed) = args.common.seed {
        spec.base.seed = seed;
    }
    let cells = spec.cells();
    eprintln!("{} cells x {} runs", cells.len(), spec.base.num_runs);
    let outcome = run_sweep(&spec, parallelism(args.common.parallelism), args.common.out_dir.as_deref())?;
    if !outcome.rows.is_empty() {
        print!("{}", render_summary(&build_report(&outcome.rows)?.summary));
    }
    report_failures(&outcome.failures)
}

fn report_failures(failures: &[(usize, usize, String)]) -> Result<ExitCode> {
    for (id, run, msg) in failures {
        eprintln!("config {id} run {run} failed: {msg}");
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let rows = read_raw_csv_file(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", args.input.display());
    }
    let report = build_report(&rows)?;
    print!("{}", render_summary(&report.summary));
    if let Some(dir) = &args.out_dir {
        let (s, c) = emit_report(&rows, dir)?;
        eprintln!("wrote {} and {}", s.display(), c.display());
    }
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: String,
    value: f64,
    limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit }
    }

    fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn oracle_checks(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for (name, m) in TabularMDP::fixtures() {
        let enc = TabularEncoding::new(m.num_states(), m.num_actions());
        let phis = enc.state_action_table();
        let (n_s, n_a) = (m.num_states(), m.num_actions());
        let (mut consistency, mut next_ratio, mut baseline) = (0.0f64, 0.0f64, 0.0f64);
        let d_b = oracle::stationary_distribution(&m)?;
        for _ in 0..samples {
            let u: Vec<f64> = (0..n_s * n_a).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pi = oracle::gibbs_table(&u, &phis);
            let (v, q) = oracle::exact_values(&m, &pi)?;
            for s in 0..n_s {
                let avg: f64 = (0..n_a).map(|a| pi[s * n_a + a] * q[s * n_a + a]).sum();
                consistency = consistency.max((avg - v[s]).abs());
            }
            next_ratio = next_ratio.max(max_abs(oracle::next_ratio_expectation(&m, &d_b, &u, &phis, &v)));
            let c: Vec<f64> = (0..n_s).map(|_| rng.gen_range(-5.0..5.0)).collect();
            baseline = baseline.max(max_abs(oracle::baseline_expectation(&m, &d_b, &u, &phis, &c)));
        }
        checks.push(Check::new(format!("{name}: V = sum_a pi Q"), consistency, 1e-10));
        checks.push(Check::new(format!("{name}: next-action ratio term"), next_ratio, 1e-12));
        checks.push(Check::new(format!("{name}: baseline invariance"), baseline, 1e-12));
    }

    let m = TabularMDP::random_four_state();
    let phis = TabularEncoding::new(m.num_states(), m.num_actions()).state_action_table();
    let dim = m.num_states() * m.num_actions();
    let mut score_err = 0.0f64;
    let h = 1e-6;
    for _ in 0..samples {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = rng.gen_range(0..m.num_states());
        let a = rng.gen_range(0..m.num_actions());
        let psi = GibbsPolicy::from_weights(u.clone()).score(&phis[s], a).to_dense();
        let mut probe = u.clone();
        for k in 0..dim {
            probe[k] = u[k] + h;
            let up = GibbsPolicy::from_weights(probe.clone()).probs(&phis[s])[a].ln();
            probe[k] = u[k] - h;
            let down = GibbsPolicy::from_weights(probe.clone()).probs(&phis[s])[a].ln();
            probe[k] = u[k];
            score_err = score_err.max((psi[k] - (up - down) / (2.0 * h)).abs());
        }
    }
    checks.push(Check::new("gibbs score vs finite differences", score_err, 1e-6));

    let d_b = oracle::stationary_distribution(&m)?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g = oracle::approximate_gradient(&m, &d_b, &u, &phis)?;
        let alpha = 1e-3 / oracle::norm(&g);
        let moved: Vec<f64> = u.iter().zip(&g).map(|(x, d)| x + alpha * d).collect();
        let (v0, _) = oracle::exact_values(&m, &oracle::gibbs_table(&u, &phis))?;
        let (v1, _) = oracle::exact_values(&m, &oracle::gibbs_table(&moved, &phis))?;
        worst = v0.iter().zip(&v1).fold(worst, |w, (a, b)| w.max(a - b));
    }
    checks.push(Check::new("policy improvement along g (max value drop)", worst.max(0.0), 1e-9));
    Ok(checks)
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode> {
    let checks = oracle_checks(args.seed, args.samples)?;
    let mut ok = true;
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        ok &= c.passed();
        println!("{tag} {:<48} {:.3e} (limit {:.0e})", c.name, c.value, c.limit);
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}
