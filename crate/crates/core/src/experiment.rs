//! Monte Carlo success-rate experiments.
//!
//! Each trial draws a random union, a planted signal and a Gaussian
//! measurement matrix from its own seed, runs spectral initialization
//! followed by alternating minimization, and declares success when the
//! sign-aligned relative error drops below `tau`. Trials of a sweep run on a
//! rayon pool; results are collected in job order and folded sequentially,
//! so the grid does not depend on the worker count.

use std::fmt::Write as _;
use std::io::Write;

use log::warn;
use rayon::prelude::*;

use crate::descent::{am_descent_with, relative_error, sign_step, loss, DescentConfig, RecoveryReport};
use crate::error::{invalid, Error, Result};
use crate::init::spectral_init_with;
use crate::linalg::derive_seed;
use crate::model::{generate_union, synthesize_signal, GroundTruth, MeasurementEnsemble, UnionOfSubspaces};
use crate::oracle::{empirical_rip, exhaustive_phase_oracle, RipEstimate};
use crate::operators::SubspaceOperators;

pub const DEFAULT_TAU: f64 = 1e-5;
pub const CSV_HEADER: &str =
    "n,m,d,R,successes,trials,success_rate,mean_iterations,mean_final_relerr";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub d_values: Vec<usize>,
    pub r_values: Vec<usize>,
    pub trials: usize,
    /// Success threshold on the relative error.
    pub tau: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            m: 256,
            d_values: vec![8, 16, 32, 64, 128],
            r_values: vec![2, 8, 32],
            trials: 100,
            tau: DEFAULT_TAU,
            max_iters: crate::descent::DEFAULT_MAX_ITERS,
            tol: crate::descent::DEFAULT_TOL,
            base_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid("n and m must be positive"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.d_values.is_empty() || self.r_values.is_empty() {
            return Err(invalid("d and R grids must be nonempty"));
        }
        if let Some(d) = self.d_values.iter().find(|&&d| d == 0 || d > self.n) {
            return Err(invalid(format!("d = {d} must be in 1..={}", self.n)));
        }
        if self.r_values.contains(&0) {
            return Err(invalid("R must be at least 1"));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(invalid("tau must be positive"));
        }
        if self.max_iters == 0 || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(invalid("max_iters must be >= 1 and tol > 0"));
        }
        Ok(())
    }

    pub fn descent(&self) -> DescentConfig {
        DescentConfig {
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }

    /// Seed of trial `trial_index` in cell `(d, r)`; independent of the rest
    /// of the grid.
    pub fn trial_seed(&self, d: usize, r: usize, trial_index: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &[self.n as u64, d as u64, r as u64, trial_index as u64],
        )
    }

    /// `(d, R)` cells in output order: `d` outer, `R` inner.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.d_values
            .iter()
            .flat_map(|&d| self.r_values.iter().map(move |&r| (d, r)))
            .collect()
    }
}

/// Dimensions and seed of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSpec {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub r: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    /// Sign-aligned relative error; `+∞` when the solver failed.
    pub relerr: f64,
    pub iterations: usize,
}

impl TrialOutcome {
    fn failed() -> Self {
        Self {
            success: false,
            relerr: f64::INFINITY,
            iterations: 0,
        }
    }
}

/// Randomly drawn problem instance of a trial.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub union: UnionOfSubspaces,
    pub truth: GroundTruth,
    pub ensemble: MeasurementEnsemble,
}

impl TrialSpec {
    /// Union, signal and measurement matrix, each from its own stream
    /// derived from `seed`.
    pub fn instance(&self) -> Result<TrialInstance> {
        let union = generate_union(self.n, self.d, self.r, derive_seed(self.seed, &[1]))?;
        let truth = synthesize_signal(&union, derive_seed(self.seed, &[2]))?;
        let ensemble =
            MeasurementEnsemble::gaussian(self.m, &truth.x_star, derive_seed(self.seed, &[3]))?;
        Ok(TrialInstance {
            union,
            truth,
            ensemble,
        })
    }
}

/// A trial together with its descent trace.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub spec: TrialSpec,
    pub outcome: TrialOutcome,
    pub subspace_index: usize,
    pub init_subspace_index: usize,
    /// `‖y‖₂` of the drawn instance.
    pub y_norm: f64,
    pub report: RecoveryReport,
}

/// Runs one trial and keeps its full trace.
pub fn run_trial_traced(spec: &TrialSpec, tau: f64, descent: &DescentConfig) -> Result<TrialRun> {
    let TrialInstance {
        union,
        truth,
        ensemble,
    } = spec.instance()?;
    let ops = SubspaceOperators::new(ensemble.a(), &union)?;
    let init = spectral_init_with(&ops, ensemble.y())?;
    let report = am_descent_with(
        &ops,
        ensemble.y(),
        &init.estimate,
        descent,
        Some(&truth.x_star),
    )?;
    let relerr = relative_error(&truth.x_star, &report.final_estimate.x)?;
    Ok(TrialRun {
        spec: *spec,
        outcome: TrialOutcome {
            success: relerr < tau,
            relerr,
            iterations: report.iterations_used,
        },
        subspace_index: truth.subspace_index,
        init_subspace_index: init.estimate.subspace_index,
        y_norm: crate::linalg::norm(ensemble.y()),
        report,
    })
}

/// Runs one trial; solver errors count as a failure with `relerr = +∞`.
pub fn run_trial(spec: &TrialSpec, tau: f64, descent: &DescentConfig) -> TrialOutcome {
    match run_trial_traced(spec, tau, descent) {
        Ok(run) => run.outcome,
        Err(err) => {
            warn!("trial {spec:?} failed: {err}");
            TrialOutcome::failed()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub r: usize,
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_final_relerr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessGrid {
    pub config: ExperimentConfig,
    pub cells: Vec<GridCell>,
}

impl SuccessGrid {
    pub fn cell(&self, d: usize, r: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.d == d && c.r == r)
    }

    /// CSV with a `#` comment line carrying the configuration.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    pub fn to_csv(&self) -> String {
        grids_to_csv(std::slice::from_ref(self))
    }

    /// `#` line describing the configuration.
    pub fn config_comment(&self) -> String {
        let c = &self.config;
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        format!(
            "# n={} m={} d={} R={} trials={} tau={:e} max_iters={} tol={:e} seed={}",
            c.n,
            c.m,
            list(&c.d_values),
            list(&c.r_values),
            c.trials,
            c.tau,
            c.max_iters,
            c.tol,
            c.base_seed
        )
    }

    /// Gnuplot data: one indexed block per `R` with columns `d m/d success_rate`.
    pub fn write_gnuplot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (block, &r) in self.config.r_values.iter().enumerate() {
            if block > 0 {
                writeln!(w, "\n")?;
            }
            writeln!(w, "# R={r}")?;
            writeln!(w, "# d m_over_d success_rate")?;
            for c in self.cells.iter().filter(|c| c.r == r) {
                writeln!(w, "{} {} {}", c.d, c.m as f64 / c.d as f64, c.success_rate)?;
            }
        }
        Ok(())
    }
}

/// One CSV for several grids: every config comment, the header, then all rows.
pub fn grids_to_csv(grids: &[SuccessGrid]) -> String {
    let mut out = String::new();
    for g in grids {
        let _ = writeln!(out, "{}", g.config_comment());
    }
    let _ = writeln!(out, "{CSV_HEADER}");
    for cell in grids.iter().flat_map(|g| &g.cells) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:e}",
            cell.n,
            cell.m,
            cell.d,
            cell.r,
            cell.successes,
            cell.trials,
            cell.success_rate,
            cell.mean_iterations,
            cell.mean_final_relerr
        );
    }
    out
}

/// Full sweep keeping every trial's trace.
#[derive(Debug, Clone)]
pub struct TracedSweep {
    pub grid: SuccessGrid,
    /// Completed runs, in job order (errored trials are absent).
    pub runs: Vec<TrialRun>,
}

fn jobs(config: &ExperimentConfig) -> Vec<TrialSpec> {
    config
        .cells()
        .into_iter()
        .flat_map(|(d, r)| {
            (0..config.trials).map(move |t| TrialSpec {
                n: config.n,
                m: config.m,
                d,
                r,
                seed: config.trial_seed(d, r, t),
            })
        })
        .collect()
}

fn aggregate(config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> SuccessGrid {
    let cells = config
        .cells()
        .into_iter()
        .zip(outcomes.chunks(config.trials))
        .map(|((d, r), chunk)| {
            let successes = chunk.iter().filter(|o| o.success).count();
            let trials = chunk.len();
            GridCell {
                n: config.n,
                m: config.m,
                d,
                r,
                successes,
                trials,
                success_rate: successes as f64 / trials as f64,
                mean_iterations: chunk.iter().map(|o| o.iterations as f64).sum::<f64>()
                    / trials as f64,
                mean_final_relerr: chunk.iter().map(|o| o.relerr).sum::<f64>() / trials as f64,
            }
        })
        .collect();
    SuccessGrid {
        config: config.clone(),
        cells,
    }
}

/// Runs every `(d, R)` cell on the current rayon pool.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<SuccessGrid> {
    config.validate()?;
    let descent = config.descent();
    let outcomes: Vec<TrialOutcome> = jobs(config)
        .par_iter()
        .map(|spec| run_trial(spec, config.tau, &descent))
        .collect();
    Ok(aggregate(config, &outcomes))
}

/// [`run_monte_carlo`] on a dedicated pool of `threads` workers.
pub fn run_monte_carlo_with_threads(config: &ExperimentConfig, threads: usize) -> Result<SuccessGrid> {
    thread_pool(threads)?.install(|| run_monte_carlo(config))
}

/// Like [`run_monte_carlo`] but also returns each trial's trace.
pub fn run_monte_carlo_traced(config: &ExperimentConfig) -> Result<TracedSweep> {
    config.validate()?;
    let descent = config.descent();
    let results: Vec<std::result::Result<TrialRun, TrialSpec>> = jobs(config)
        .par_iter()
        .map(|spec| {
            run_trial_traced(spec, config.tau, &descent).map_err(|err| {
                warn!("trial {spec:?} failed: {err}");
                *spec
            })
        })
        .collect();
    let outcomes: Vec<TrialOutcome> = results
        .iter()
        .map(|r| r.as_ref().map_or(TrialOutcome::failed(), |run| run.outcome))
        .collect();
    Ok(TracedSweep {
        grid: aggregate(config, &outcomes),
        runs: results.into_iter().filter_map(|r| r.ok()).collect(),
    })
}

/// Solver-versus-oracle comparison on one tiny instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub seed: u64,
    /// Global optimum of the joint loss.
    pub oracle_loss: f64,
    /// Joint loss at the solver's output with its optimal phase.
    pub solver_loss: f64,
    pub y_norm: f64,
    pub solver_relerr: f64,
    pub report: RecoveryReport,
}

impl OracleComparison {
    /// Solver within `rel_tol · ‖y‖₂` of the global optimum.
    pub fn matches(&self, rel_tol: f64) -> bool {
        self.solver_loss - self.oracle_loss <= rel_tol * self.y_norm
    }
}

/// Runs spectral initialization plus descent and the exhaustive oracle on
/// the instance drawn from `spec`.
pub fn compare_with_oracle(spec: &TrialSpec, descent: &DescentConfig) -> Result<OracleComparison> {
    let TrialInstance {
        union,
        truth,
        ensemble,
    } = spec.instance()?;
    let (a, y) = (ensemble.a(), ensemble.y());
    let ops = SubspaceOperators::new(a, &union)?;
    let init = spectral_init_with(&ops, y)?;
    let report = am_descent_with(&ops, y, &init.estimate, descent, Some(&truth.x_star))?;
    let x_hat = &report.final_estimate.x;
    let solver_loss = loss(a, x_hat, &sign_step(a, x_hat)?, y)?;
    let oracle = exhaustive_phase_oracle(a, y, &union)?;
    Ok(OracleComparison {
        seed: spec.seed,
        oracle_loss: oracle.best_loss,
        solver_loss,
        y_norm: crate::linalg::norm(y),
        solver_relerr: relative_error(&truth.x_star, x_hat)?,
        report,
    })
}

/// Random-probe RIP estimate of `A/√m` for the Gaussian `A` and union drawn
/// from `spec` (the same streams a trial uses).
pub fn rip_trial(spec: &TrialSpec, num_probes: usize) -> Result<RipEstimate> {
    let union = generate_union(spec.n, spec.d, spec.r, derive_seed(spec.seed, &[1]))?;
    let a = crate::linalg::sample_gaussian_matrix(spec.m, spec.n, derive_seed(spec.seed, &[3]))?;
    empirical_rip(&a, &union, num_probes, derive_seed(spec.seed, &[4]))
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}
