use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use uospr_core::descent::DescentConfig;
use uospr_core::experiment::{
    compare_with_oracle, grids_to_csv, rip_trial, run_monte_carlo, run_trial_traced,
    thread_pool, ExperimentConfig, TrialSpec, DEFAULT_TAU,
};
use uospr_core::model::write_instance;
use uospr_core::oracle::DEFAULT_RIP_PROBES;

/// Phase retrieval over a union of subspaces: Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "uospr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Success-rate sweep over the (d, R) grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Also run n = 512 and n = 1024 (with m = n).
        #[arg(long)]
        full_grid: bool,
        /// Write a gnuplot data block next to the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// One trial with its per-iteration trace.
    Trial {
        #[command(flatten)]
        common: CommonArgs,
        /// Dump the drawn union and measurements to a binary instance file.
        #[arg(long)]
        save_instance: Option<PathBuf>,
    },
    /// Compare the solver with the exhaustive global minimizer on tiny instances.
    OracleCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Empirical restricted-isometry constants of A/√m over the union.
    Rip {
        #[command(flatten)]
        common: CommonArgs,
        /// Probes per seed.
        #[arg(long, default_value_t = DEFAULT_RIP_PROBES)]
        probes: usize,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Number of measurements (defaults to n).
    #[arg(long)]
    m: Option<usize>,
    /// Subspace dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Numbers of subspaces, comma separated.
    #[arg(long = "r-subspaces", value_delimiter = ',')]
    r_subspaces: Vec<usize>,
    /// Trials per grid cell (seeds for oracle-check and rip).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn descent(&self) -> Result<DescentConfig> {
        ensure!(self.max_iters >= 1, "--max-iters must be at least 1");
        ensure!(self.tol > 0.0, "--tol must be positive");
        Ok(DescentConfig {
            max_iters: self.max_iters,
            tol: self.tol,
        })
    }

    fn single(values: &[usize], default: usize, flag: &str) -> Result<usize> {
        match values {
            [] => Ok(default),
            [v] => Ok(*v),
            _ => bail!("{flag} takes a single value for this subcommand"),
        }
    }

    fn trial_spec(&self, defaults: (usize, usize, usize, usize)) -> Result<TrialSpec> {
        let (n0, m0, d0, r0) = defaults;
        let n = self.n.unwrap_or(n0);
        let spec = TrialSpec {
            n,
            m: self.m.unwrap_or(if self.n.is_some() { n } else { m0 }),
            d: Self::single(&self.d, d0, "--d")?,
            r: Self::single(&self.r_subspaces, r0, "--r-subspaces")?,
            seed: self.seed,
        };
        ensure!(spec.n >= 1 && spec.m >= 1, "n and m must be positive");
        ensure!(spec.d >= 1 && spec.d <= spec.n, "d must be in 1..=n");
        ensure!(spec.r >= 1, "--r-subspaces must be at least 1");
        Ok(spec)
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn sweep(common: &CommonArgs, full_grid: bool, gnuplot: Option<&Path>) -> Result<()> {
    let defaults = ExperimentConfig::default();
    let n = common.n.unwrap_or(defaults.n);
    let mut sizes = vec![(n, common.m.unwrap_or(n))];
    if full_grid {
        sizes.extend([512, 1024].into_iter().filter(|&k| k != n).map(|k| (k, k)));
    }
    let mut grids = Vec::new();
    for (n, m) in sizes {
        let config = ExperimentConfig {
            n,
            m,
            d_values: if common.d.is_empty() {
                defaults.d_values.iter().copied().filter(|&d| d <= n).collect()
            } else {
                common.d.clone()
            },
            r_values: if common.r_subspaces.is_empty() {
                defaults.r_values.clone()
            } else {
                common.r_subspaces.clone()
            },
            trials: common.trials.unwrap_or(defaults.trials),
            tau: common.tau,
            max_iters: common.max_iters,
            tol: common.tol,
            base_seed: common.seed,
        };
        config.validate()?;
        info!("sweeping n={n} m={m}");
        grids.push(run_monte_carlo(&config)?);
    }
    open_output(common.out.as_deref())?.write_all(grids_to_csv(&grids).as_bytes())?;
    if let Some(path) = gnuplot {
        let mut w = open_output(Some(path))?;
        for (i, g) in grids.iter().enumerate() {
            if i > 0 {
                writeln!(w, "\n")?;
            }
            writeln!(w, "# n={} m={}", g.config.n, g.config.m)?;
            g.write_gnuplot(&mut w)?;
        }
    }
    Ok(())
}

fn trial(common: &CommonArgs, save_instance: Option<&Path>) -> Result<()> {
    let spec = common.trial_spec((256, 256, 8, 8))?;
    let run = run_trial_traced(&spec, common.tau, &common.descent()?)?;
    if let Some(path) = save_instance {
        let inst = spec.instance()?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_instance(BufWriter::new(file), &inst.union, Some(&inst.ensemble), spec.seed)?;
    }
    run.report.write_csv(open_output(common.out.as_deref())?)?;
    eprintln!(
        "n={} m={} d={} R={} seed={}: success={} relerr={:e} iterations={} converged={} \
         true_subspace={} init_subspace={} final_subspace={}",
        spec.n,
        spec.m,
        spec.d,
        spec.r,
        spec.seed,
        run.outcome.success,
        run.outcome.relerr,
        run.outcome.iterations,
        run.report.converged,
        run.subspace_index,
        run.init_subspace_index,
        run.report.final_estimate.subspace_index
    );
    Ok(())
}

fn oracle_check(common: &CommonArgs) -> Result<()> {
    let base = common.trial_spec((6, 8, 2, 2))?;
    let seeds = common.trials.unwrap_or(20);
    let descent = common.descent()?;
    let mut out = open_output(common.out.as_deref())?;
    writeln!(out, "seed,oracle_loss,solver_loss,y_norm,solver_relerr,matches")?;
    let mut matched = 0;
    for offset in 0..seeds as u64 {
        let spec = TrialSpec {
            seed: base.seed + offset,
            ..base
        };
        let cmp = compare_with_oracle(&spec, &descent)?;
        let ok = cmp.matches(1e-6);
        matched += usize::from(ok);
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{}",
            cmp.seed, cmp.oracle_loss, cmp.solver_loss, cmp.y_norm, cmp.solver_relerr, ok
        )?;
    }
    eprintln!("solver matched the global optimum on {matched}/{seeds} instances");
    Ok(())
}

fn rip(common: &CommonArgs, probes: usize) -> Result<()> {
    ensure!(probes >= 1, "--probes must be at least 1");
    let n = common.n.unwrap_or(64);
    let d = CommonArgs::single(&common.d, 4, "--d")?;
    let r = CommonArgs::single(&common.r_subspaces, 4, "--r-subspaces")?;
    let m_default = (100.0 * (d as f64 + (r as f64).ln())).ceil() as usize;
    let base = TrialSpec {
        n,
        m: common.m.unwrap_or(m_default),
        d,
        r,
        seed: common.seed,
    };
    ensure!(base.d <= base.n && base.m >= 1, "need 1 <= d <= n and m >= 1");
    let seeds = common.trials.unwrap_or(100);
    let mut out = open_output(common.out.as_deref())?;
    writeln!(out, "seed,delta_lower,delta_upper,num_probes")?;
    let mut worst = 0.0f64;
    for offset in 0..seeds as u64 {
        let spec = TrialSpec {
            seed: base.seed + offset,
            ..base
        };
        let est = rip_trial(&spec, probes)?;
        worst = worst.max(est.delta_upper.max(est.delta_lower));
        writeln!(
            out,
            "{},{},{},{}",
            spec.seed, est.delta_lower, est.delta_upper, est.num_probes
        )?;
    }
    eprintln!(
        "n={} m={} d={} R={}: largest observed constant {worst:.4} over {seeds} seeds",
        base.n, base.m, base.d, base.r
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Sweep { common, .. }
        | Command::Trial { common, .. }
        | Command::OracleCheck { common }
        | Command::Rip { common, .. } => common,
    };
    ensure!(common.tau > 0.0, "--tau must be positive");
    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    ensure!(threads >= 1, "--threads must be at least 1");
    let pool = thread_pool(threads)?;
    pool.install(|| match &cli.command {
        Command::Sweep {
            common,
            full_grid,
            gnuplot,
        } => sweep(common, *full_grid, gnuplot.as_deref()),
        Command::Trial {
            common,
            save_instance,
        } => trial(common, save_instance.as_deref()),
        Command::OracleCheck { common } => oracle_check(common),
        Command::Rip { common, probes } => rip(common, *probes),
    })
}
