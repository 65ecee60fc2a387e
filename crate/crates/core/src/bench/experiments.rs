//! The six experiments. Each `run_*` is a pure function of its configuration;
//! [`run`] adds the worker pool and [`write_outputs`] persists the result.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::rate::RateResult;
use crate::closed_loop::{
    neumaier_sum, pathwise_cost, simulate_feedback, simulate_forward_given_control, CostConvention,
    CostEstimate,
};
use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::open_loop::{
    gd_run, gd_run_mc, kappa_bound, CoefficientControl, ConditionalEstimator, GdConfig, GdReport,
    McConfig,
};
use crate::problem::ProblemSpec;
use crate::regression::{build_partition, default_cells, fit, SampleSet};
use crate::riccati::{solve_eta, solve_riccati, DenseStorage, EtaSequence, RiccatiScheme, RiccatiSolution};
use crate::stochastics::{
    coarsen, normal_quantile, sample_ensemble, sample_path, sample_uniforms, SeedSpec, TimeGrid,
};

/// Smallest ratio between the reference and the finest tested time step count.
pub const RICCATI_REF_FACTOR: usize = 16;
/// Smallest ratio between the reference and the finest tested mesh.
pub const SPACE_REF_FACTOR: usize = 4;
/// Paths required by the temporal rate under multiplicative noise.
pub const MULTIPLICATIVE_MIN_PATHS: usize = 1000;
/// Held-out points of the regression demo.
pub const REGRESS_TEST_POINTS: usize = 4096;
/// Noise level of the regression demo.
pub const REGRESS_NOISE: f64 = 0.1;

/// Named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Header line plus one line per row, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// What every experiment hands to the writer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    /// `key = value` lines appended to the meta file.
    pub summary: Vec<(String, String)>,
    /// Plot both axes logarithmically.
    pub log_log: bool,
}

fn rate_summary(prefix: &str, rate: &RateResult, out: &mut Vec<(String, String)>) {
    match rate.fit {
        Some(f) => {
            out.push((format!("{prefix}_slope"), format!("{}", f.slope)));
            out.push((format!("{prefix}_half_width"), format!("{}", f.half_width)));
        }
        None => out.push((format!("{prefix}_slope"), "degenerate".into())),
    }
}

fn require_points(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    Ok(())
}

fn first(list: &[usize], key: &str) -> Result<usize> {
    list.first()
        .copied()
        .ok_or_else(|| Error::Config(format!("'{key}' is empty")))
}

fn space_for(cfg: &ExperimentConfig, n_elements: usize) -> Result<Arc<FemSpace>> {
    Ok(Arc::new(FemSpace::assemble(cfg.a, cfg.b, n_elements)?))
}

fn spec_for(cfg: &ExperimentConfig, space: Arc<FemSpace>, steps: usize) -> Result<ProblemSpec> {
    let grid = TimeGrid::new(cfg.horizon, steps)?;
    ProblemSpec::from_profiles(space, grid, cfg.beta, cfg.alpha, &cfg.x0, &cfg.sigma)
}

/// Riccati and η for the feedback law of `spec`.
fn feedback_law(spec: &ProblemSpec, scheme: RiccatiScheme) -> Result<(RiccatiSolution, EtaSequence)> {
    let ric = solve_riccati(&spec.space, spec.grid, spec.beta, spec.alpha, scheme, DenseStorage::Never)?;
    let eta = solve_eta(&ric, spec)?;
    Ok((ric, eta))
}

fn gd_config(cfg: &ExperimentConfig, spec: &ProblemSpec) -> GdConfig {
    GdConfig {
        kappa: cfg.kappa.unwrap_or_else(|| kappa_bound(spec)),
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    }
}

/// `sqrt(max_n mean_paths sq[path][n])` with compensated means.
fn strong_error(sq: &[Vec<f64>]) -> f64 {
    let len = sq.first().map_or(0, |p| p.len());
    (0..len)
        .map(|n| neumaier_sum(sq.iter().map(|p| p[n])) / sq.len() as f64)
        .fold(0.0, f64::max)
        .sqrt()
}

// ---------------------------------------------------------------- riccati-rate

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiRateReport {
    pub steps: Vec<usize>,
    /// `sup_i λ_i^{-1/2} |p_{0,i} − p_{0,i}^ref|` against `τ`.
    pub weighted: RateResult,
    /// `sup_i |p_{0,i} − p_{0,i}^ref|` against `τ`.
    pub sup: RateResult,
}

/// Error of `P_0` against the V2 scheme at the reference step.
pub fn run_riccati_rate(cfg: &ExperimentConfig) -> Result<RiccatiRateReport> {
    require_points(cfg.steps.len())?;
    let finest = *cfg.steps.iter().max().unwrap_or(&0);
    if cfg.ref_steps < RICCATI_REF_FACTOR * finest {
        return Err(Error::Config(format!(
            "ref_steps = {} must be at least {RICCATI_REF_FACTOR} x {finest}",
            cfg.ref_steps
        )));
    }
    let space = space_for(cfg, first(&cfg.n_elements, "n_elements")?)?;
    let solve = |steps: usize, scheme: RiccatiScheme| -> Result<Vec<f64>> {
        let grid = TimeGrid::new(cfg.horizon, steps)?;
        let sol = solve_riccati(&space, grid, cfg.beta, cfg.alpha, scheme, DenseStorage::Never)?;
        Ok(sol.diagonal[0].entries.clone())
    };
    let reference = solve(cfg.ref_steps, RiccatiScheme::V2)?;
    let mut weighted = Vec::new();
    let mut sup = Vec::new();
    for &steps in &cfg.steps {
        let p0 = solve(steps, cfg.scheme)?;
        let tau = cfg.horizon / steps as f64;
        let diffs: Vec<f64> = p0.iter().zip(&reference).map(|(p, r)| (p - r).abs()).collect();
        let w = diffs
            .iter()
            .zip(&space.eigenvalues)
            .map(|(d, l)| d / l.sqrt())
            .fold(0.0, f64::max);
        weighted.push((tau, w));
        sup.push((tau, diffs.iter().copied().fold(0.0, f64::max)));
    }
    Ok(RiccatiRateReport {
        steps: cfg.steps.clone(),
        weighted: RateResult::from_points(weighted)?,
        sup: RateResult::from_points(sup)?,
    })
}

impl RiccatiRateReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&["steps", "tau", "err_weighted", "err_sup"]);
        for (i, &n) in self.steps.iter().enumerate() {
            let (tau, w) = self.weighted.points[i];
            table.push(vec![n as f64, tau, w, self.sup.points[i].1]);
        }
        let mut summary = Vec::new();
        rate_summary("weighted", &self.weighted, &mut summary);
        rate_summary("sup", &self.sup, &mut summary);
        RunOutput {
            table,
            summary,
            log_log: true,
        }
    }
}

// ---------------------------------------------------------------- time-rate

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRateReport {
    pub steps: Vec<usize>,
    /// `max_n (E‖X^ref(t_n) − X_n‖²)^{1/2}` against `τ`.
    pub rate: RateResult,
}

/// Strong error of the closed-loop state against a fine-step reference on
/// common Brownian paths.
pub fn run_time_rate(cfg: &ExperimentConfig) -> Result<TimeRateReport> {
    require_points(cfg.steps.len())?;
    if cfg.paths == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if cfg.beta != 0.0 && cfg.paths < MULTIPLICATIVE_MIN_PATHS {
        return Err(Error::TooFewPaths {
            got: cfg.paths,
            required: MULTIPLICATIVE_MIN_PATHS,
        });
    }
    let space = space_for(cfg, first(&cfg.n_elements, "n_elements")?)?;
    let ref_spec = spec_for(cfg, space.clone(), cfg.ref_steps)?;
    let (ref_ric, ref_eta) = feedback_law(&ref_spec, cfg.scheme)?;
    let levels: Vec<(usize, ProblemSpec, RiccatiSolution, EtaSequence)> = cfg
        .steps
        .iter()
        .map(|&n| {
            ref_spec.grid.coarsened(cfg.ref_steps / n.max(1)).and_then(|g| {
                if g.steps != n {
                    return Err(Error::Coarsen {
                        factor: cfg.ref_steps / n.max(1),
                        steps: cfg.ref_steps,
                    });
                }
                let spec = spec_for(cfg, space.clone(), n)?;
                let (ric, eta) = feedback_law(&spec, cfg.scheme)?;
                Ok((cfg.ref_steps / n, spec, ric, eta))
            })
        })
        .collect::<Result<_>>()?;

    // per path, per level, per coarse node
    let sq: Vec<Vec<Vec<f64>>> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(ref_spec.grid, SeedSpec::new(cfg.seed, i));
            let reference = simulate_feedback(&ref_ric, &ref_eta, &ref_spec, &path)?;
            levels
                .iter()
                .map(|(factor, spec, ric, eta)| {
                    let coarse = coarsen(&path, *factor)?;
                    let traj = simulate_feedback(ric, eta, spec, &coarse)?;
                    Ok(traj
                        .states
                        .iter()
                        .enumerate()
                        .map(|(n, x)| x.sub(&reference.states[n * factor]).l2_norm_sq())
                        .collect())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let points = levels
        .iter()
        .enumerate()
        .map(|(l, (_, spec, _, _))| {
            let per_path: Vec<Vec<f64>> = sq.iter().map(|p| p[l].clone()).collect();
            (spec.tau(), strong_error(&per_path))
        })
        .collect();
    Ok(TimeRateReport {
        steps: cfg.steps.clone(),
        rate: RateResult::from_points(points)?,
    })
}

impl TimeRateReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&["steps", "tau", "strong_error"]);
        for (&n, &(tau, e)) in self.steps.iter().zip(&self.rate.points) {
            table.push(vec![n as f64, tau, e]);
        }
        let mut summary = Vec::new();
        rate_summary("strong", &self.rate, &mut summary);
        RunOutput {
            table,
            summary,
            log_log: true,
        }
    }
}

// ---------------------------------------------------------------- space-rate

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceRateReport {
    pub n_elements: Vec<usize>,
    /// `max_n (E‖U^ref_n − U_n‖²)^{1/2}` on the reference mesh against `h`.
    pub control: RateResult,
    /// `‖x_0 − Π_h x_0‖` against `h`.
    pub projection: RateResult,
}

/// Closed-loop control error against a fine-mesh reference at a fixed step.
pub fn run_space_rate(cfg: &ExperimentConfig) -> Result<SpaceRateReport> {
    require_points(cfg.n_elements.len())?;
    if cfg.paths == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let finest = *cfg.n_elements.iter().max().unwrap_or(&0);
    if cfg.ref_elements < SPACE_REF_FACTOR * finest {
        return Err(Error::Config(format!(
            "ref_elements = {} must be at least {SPACE_REF_FACTOR} x {finest}",
            cfg.ref_elements
        )));
    }
    for &n in &cfg.n_elements {
        if !cfg.ref_elements.is_multiple_of(n) {
            return Err(Error::NotNested {
                coarse: n,
                fine: cfg.ref_elements,
            });
        }
    }
    let steps = first(&cfg.steps, "steps")?;
    let ref_space = space_for(cfg, cfg.ref_elements)?;
    let ref_spec = spec_for(cfg, ref_space.clone(), steps)?;
    let (ref_ric, ref_eta) = feedback_law(&ref_spec, cfg.scheme)?;
    let levels: Vec<(ProblemSpec, RiccatiSolution, EtaSequence)> = cfg
        .n_elements
        .iter()
        .map(|&n| {
            let spec = spec_for(cfg, space_for(cfg, n)?, steps)?;
            let (ric, eta) = feedback_law(&spec, cfg.scheme)?;
            Ok((spec, ric, eta))
        })
        .collect::<Result<_>>()?;

    let paths = sample_ensemble(ref_spec.grid, cfg.seed, 0, cfg.paths);
    let sq: Vec<Vec<Vec<f64>>> = paths
        .par_iter()
        .map(|path| {
            let reference = simulate_feedback(&ref_ric, &ref_eta, &ref_spec, path)?;
            let ref_nodal: Vec<Vec<f64>> = reference
                .controls
                .iter()
                .map(|u| ref_space.nodal_values(u))
                .collect();
            levels
                .iter()
                .map(|(spec, ric, eta)| {
                    let traj = simulate_feedback(ric, eta, spec, path)?;
                    traj.controls
                        .iter()
                        .zip(&ref_nodal)
                        .map(|(u, r)| {
                            let fine = spec.space.prolongate_nodal(&spec.space.nodal_values(u), &ref_space)?;
                            let diff: Vec<f64> = fine.iter().zip(r).map(|(a, b)| a - b).collect();
                            Ok(ref_space.l2_norm_nodal(&diff).powi(2))
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let x0 = |x: f64| cfg.x0.eval(cfg.a, cfg.b, cfg.horizon, 0.0, x);
    let mut control = Vec::new();
    let mut projection = Vec::new();
    for (l, (spec, _, _)) in levels.iter().enumerate() {
        let h = spec.space.mesh.h;
        let per_path: Vec<Vec<f64>> = sq.iter().map(|p| p[l].clone()).collect();
        control.push((h, strong_error(&per_path)));
        let p = spec.space.project_l2(x0)?;
        projection.push((h, spec.space.l2_error_nodal(&spec.space.nodal_values(&p), x0)));
    }
    Ok(SpaceRateReport {
        n_elements: cfg.n_elements.clone(),
        control: RateResult::from_points(control)?,
        projection: RateResult::from_points(projection)?,
    })
}

impl SpaceRateReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&["n_elements", "h", "control_error", "projection_error"]);
        for (i, &n) in self.n_elements.iter().enumerate() {
            let (h, e) = self.control.points[i];
            table.push(vec![n as f64, h, e, self.projection.points[i].1]);
        }
        let mut summary = Vec::new();
        rate_summary("control", &self.control, &mut summary);
        rate_summary("projection", &self.projection, &mut summary);
        RunOutput {
            table,
            summary,
            log_log: true,
        }
    }
}

// ---------------------------------------------------------------- gd-run

#[derive(Debug, Clone, PartialEq)]
pub struct GdRunReport {
    pub kappa: f64,
    /// `exact` for additive noise, `regression` otherwise.
    pub estimator: &'static str,
    pub report: GdReport,
}

/// Gradient descent from `U = 0`: exact conditional expectations when
/// `β = 0`, partitioning regression on `paths` samples otherwise.
pub fn run_gd(cfg: &ExperimentConfig) -> Result<GdRunReport> {
    let space = space_for(cfg, first(&cfg.n_elements, "n_elements")?)?;
    let spec = spec_for(cfg, space, first(&cfg.steps, "steps")?)?;
    let config = gd_config(cfg, &spec);
    if cfg.beta == 0.0 {
        let initial = CoefficientControl::zeros(spec.grid.steps, spec.dim());
        let (_, report) = gd_run(&spec, &config, initial)?;
        Ok(GdRunReport {
            kappa: config.kappa,
            estimator: "exact",
            report,
        })
    } else {
        let mc = McConfig {
            paths: cfg.paths,
            master_seed: cfg.seed,
            estimator: ConditionalEstimator::Regression {
                cells: cfg.cells.unwrap_or_else(|| default_cells(cfg.paths)),
            },
        };
        let run = gd_run_mc(&spec, &config, &mc)?;
        Ok(GdRunReport {
            kappa: config.kappa,
            estimator: "regression",
            report: run.report,
        })
    }
}

impl GdRunReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&["iter", "distance", "cost"]);
        for (k, (d, c)) in self.report.distances.iter().zip(&self.report.costs).enumerate() {
            table.push(vec![(k + 1) as f64, *d, *c]);
        }
        let summary = vec![
            ("kappa".into(), format!("{}", self.kappa)),
            ("estimator".into(), self.estimator.into()),
            ("iterations".into(), self.report.iterations_run.to_string()),
            ("converged".into(), self.report.converged.to_string()),
            ("final_cost".into(), format!("{}", self.report.final_cost)),
        ];
        RunOutput {
            table,
            summary,
            log_log: false,
        }
    }
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub steps: usize,
    pub tau: f64,
    /// Exact cost of the converged descent iterate.
    pub gd_cost: f64,
    pub gd_iterations: usize,
    pub feedback: CostEstimate,
    /// Per-path feedback cost minus the cost of the descent iterate on the same path.
    pub paired_gap: CostEstimate,
}

impl CompareRow {
    pub fn gap(&self) -> f64 {
        self.feedback.mean - self.gd_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Open-loop descent against closed-loop feedback for additive noise. Paths
/// are drawn at the finest step count and coarsened to the others.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    if cfg.beta != 0.0 {
        return Err(Error::AdditiveNoiseRequired { beta: cfg.beta });
    }
    if cfg.paths == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let finest = *cfg.steps.iter().max().ok_or_else(|| Error::Config("'steps' is empty".into()))?;
    let space = space_for(cfg, first(&cfg.n_elements, "n_elements")?)?;
    let fine_grid = TimeGrid::new(cfg.horizon, finest)?;
    let paths = sample_ensemble(fine_grid, cfg.seed, 0, cfg.paths);

    let rows = cfg
        .steps
        .iter()
        .map(|&steps| {
            let factor = finest / steps.max(1);
            if factor * steps != finest {
                return Err(Error::Coarsen { factor, steps: finest });
            }
            let spec = spec_for(cfg, space.clone(), steps)?;
            let (ric, eta) = feedback_law(&spec, cfg.scheme)?;
            let initial = CoefficientControl::zeros(steps, spec.dim());
            let (ustar, report) = gd_run(&spec, &gd_config(cfg, &spec), initial)?;
            let tau = spec.tau();
            let pairs: Vec<(f64, f64)> = paths
                .par_iter()
                .map(|path| {
                    let coarse = coarsen(path, factor)?;
                    let fb = simulate_feedback(&ric, &eta, &spec, &coarse)?;
                    let fb_cost = pathwise_cost(&fb.states, &fb.controls, tau, spec.alpha, CostConvention::LeftPoint);
                    let u = ustar.evaluate_on_path(&coarse);
                    let x = simulate_forward_given_control(&u, &spec, &coarse)?;
                    let gd_cost = pathwise_cost(&x, &u, tau, spec.alpha, CostConvention::LeftPoint);
                    Ok((fb_cost, fb_cost - gd_cost))
                })
                .collect::<Result<_>>()?;
            let fb: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let gaps: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            Ok(CompareRow {
                steps,
                tau,
                gd_cost: report.final_cost,
                gd_iterations: report.iterations_run,
                feedback: CostEstimate::from_samples(&fb)?,
                paired_gap: CostEstimate::from_samples(&gaps)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompareReport { rows })
}

impl CompareReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&[
            "steps",
            "tau",
            "gd_cost",
            "gd_iterations",
            "feedback_cost",
            "feedback_std_error",
            "gap",
            "paired_gap",
            "paired_gap_std_error",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.steps as f64,
                r.tau,
                r.gd_cost,
                r.gd_iterations as f64,
                r.feedback.mean,
                r.feedback.std_error,
                r.gap(),
                r.paired_gap.mean,
                r.paired_gap.std_error,
            ]);
        }
        RunOutput {
            table,
            summary: Vec::new(),
            log_log: true,
        }
    }
}

// ---------------------------------------------------------------- regress-demo

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressRow {
    pub samples: usize,
    pub cells: usize,
    /// Mean squared residual on the training samples.
    pub in_sample_mse: f64,
    /// Mean squared distance to the true regression function on held-out points.
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressDemoReport {
    pub rows: Vec<RegressRow>,
}

/// True regression function of the demo on `[0, 1]²`.
pub fn regress_truth(x: &[f64]) -> f64 {
    (2.0 * std::f64::consts::PI * x[0]).sin() + x[1] * x[1]
}

fn uniform_points(seed: SeedSpec, count: usize) -> Vec<Vec<f64>> {
    sample_uniforms(seed, 2 * count)
        .chunks_exact(2)
        .map(|c| c.to_vec())
        .collect()
}

/// Partitioning regression of `regress_truth` plus Gaussian noise for each
/// sample size. Samples of smaller sizes are prefixes of the larger ones.
pub fn run_regress_demo(cfg: &ExperimentConfig) -> Result<RegressDemoReport> {
    let largest = *cfg.samples.iter().max().ok_or_else(|| Error::Config("'samples' is empty".into()))?;
    let xs = uniform_points(SeedSpec::new(cfg.seed, 0), largest);
    let ys: Vec<f64> = sample_uniforms(SeedSpec::new(cfg.seed, 1), largest)
        .into_iter()
        .zip(&xs)
        .map(|(u, x)| regress_truth(x) + REGRESS_NOISE * normal_quantile(u))
        .collect();
    let test = uniform_points(SeedSpec::new(cfg.seed, 2), REGRESS_TEST_POINTS);

    let rows = cfg
        .samples
        .iter()
        .map(|&m| {
            let cells = cfg.cells.unwrap_or_else(|| default_cells(m)).min(m);
            let set = SampleSet::new(xs[..m].to_vec(), ys[..m].to_vec())?;
            let est = fit(&build_partition(&set.xs, cells)?, &set)?;
            let in_sample = neumaier_sum(set.xs.iter().zip(&set.ys).map(|(x, y)| (y - est.predict(x)).powi(2)));
            let out = neumaier_sum(test.iter().map(|x| (regress_truth(x) - est.predict(x)).powi(2)));
            Ok(RegressRow {
                samples: m,
                cells,
                in_sample_mse: in_sample / m as f64,
                test_mse: out / test.len() as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RegressDemoReport { rows })
}

impl RegressDemoReport {
    pub fn output(&self) -> RunOutput {
        let mut table = Table::new(&["samples", "cells", "in_sample_mse", "test_mse"]);
        for r in &self.rows {
            table.push(vec![r.samples as f64, r.cells as f64, r.in_sample_mse, r.test_mse]);
        }
        RunOutput {
            table,
            summary: vec![("noise_variance".into(), format!("{}", REGRESS_NOISE * REGRESS_NOISE))],
            log_log: true,
        }
    }
}

// ---------------------------------------------------------------- driver

/// Run the configured experiment on a pool of `cfg.workers` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cfg.experiment {
        Experiment::RiccatiRate => run_riccati_rate(cfg).map(|r| r.output()),
        Experiment::TimeRate => run_time_rate(cfg).map(|r| r.output()),
        Experiment::SpaceRate => run_space_rate(cfg).map(|r| r.output()),
        Experiment::GdRun => run_gd(cfg).map(|r| r.output()),
        Experiment::Compare => run_compare(cfg).map(|r| r.output()),
        Experiment::RegressDemo => run_regress_demo(cfg).map(|r| r.output()),
    })
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub plot: Option<PathBuf>,
}

/// CSV at `cfg.out` (default `<experiment>.csv`), the meta file next to it,
/// and optionally a gnuplot script.
pub fn write_outputs(cfg: &ExperimentConfig, output: &RunOutput, emit_plot: bool) -> Result<OutputPaths> {
    let csv = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&csv, output.table.to_csv())?;

    let meta = csv.with_extension("meta");
    let mut text = cfg.to_text();
    let _ = writeln!(text, "\n[result]");
    let _ = writeln!(text, "csv = {}", csv.display());
    let _ = writeln!(text, "columns = {}", output.table.header.join(","));
    for (k, v) in &output.summary {
        let _ = writeln!(text, "{k} = {v}");
    }
    fs::write(&meta, text)?;

    let plot = if emit_plot {
        let path = csv.with_extension("gp");
        fs::write(&path, plot_script(&csv, output))?;
        Some(path)
    } else {
        None
    };
    Ok(OutputPaths { csv, meta, plot })
}

/// Gnuplot script plotting every column against the first.
pub fn plot_script(csv: &Path, output: &RunOutput) -> String {
    let header = &output.table.header;
    let name = csv.file_name().map_or_else(|| csv.display().to_string(), |n| n.to_string_lossy().into_owned());
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{}'", header[0]);
    if output.log_log {
        let _ = writeln!(s, "set logscale xy");
    } else {
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}'", csv.with_extension("png").file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()));
    let curves: Vec<String> = header
        .iter()
        .skip(1)
        .map(|col| format!("'{name}' using '{}':'{col}' with linespoints", header[0]))
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}
