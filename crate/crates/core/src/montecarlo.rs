//! Replicated simulation studies and curve sweeps.
//!
//! [`run`] reproduces the bias / RMSE / coverage experiment: the projection
//! truth is computed once from a large simulated population, then each
//! replicate draws a fresh sample, attaches nuisance error (noise-injected
//! truth by default, or cross-fitted logistic fits), computes pseudo-outcomes,
//! solves the projections, and records the point estimate and interval at the
//! evaluation covariate. Replicate seeds derive from the master seed by
//! index, so the report is a pure function of the configuration.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::eif::{self, Target};
use crate::error::{Error, Result};
use crate::estimand::{self, EstimandValues, NuisanceAt};
use crate::math::{self, stream};
use crate::nuisance::{CrossFitNuisances, NoiseMode, NoiseSpec, NuisanceModel, N_COMPONENTS};
use crate::projection::{self, ProjectionModel, TargetFits, Weight};
use crate::world::{self, DgpSpec};

/// How each replicate obtains its nuisance model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceSource {
    /// True curves with injected noise at the configured rate.
    NoisyTruth,
    /// Cross-fitted logistic regressions on the replicate's own records.
    Fitted,
}

/// Working-model settings shared by all targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionSettings {
    pub basis: Basis,
    pub weight: Weight,
    /// Confidence level for the pointwise intervals.
    pub level: f64,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            basis: Basis::default(),
            weight: Weight::Uniform,
            level: 0.95,
        }
    }
}

/// Full configuration of a simulation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_reps: usize,
    /// Sample size per replicate.
    pub n: usize,
    /// Nuisance convergence exponents to sweep.
    pub alpha_rates: Vec<f64>,
    /// Per-component noise mean scales.
    pub c1: [f64; N_COMPONENTS],
    /// Per-component noise variance scales.
    pub c2: [f64; N_COMPONENTS],
    pub noise_mode: NoiseMode,
    /// Covariate value at which the projections are evaluated.
    pub eval_x: f64,
    pub targets: Vec<Target>,
    /// Population size for the truth projection.
    pub pop_size_truth: usize,
    pub master_seed: u64,
    pub nuisance_source: NuisanceSource,
    pub projection: ProjectionSettings,
    /// Folds for the fitted nuisance path.
    pub k_folds: usize,
    /// Basis for the fitted nuisance path.
    pub nuisance_basis: Basis,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Abort when more than this fraction of replicates error.
    pub max_failure_fraction: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_reps: 1000,
            n: 1000,
            alpha_rates: vec![0.3, 0.1],
            c1: [1.0; N_COMPONENTS],
            c2: [1.0; N_COMPONENTS],
            noise_mode: NoiseMode::PerPoint,
            eval_x: 0.75,
            targets: vec![Target::Psi, Target::Zeta, Target::Delta],
            pop_size_truth: 10_000_000,
            master_seed: 20_240_716,
            nuisance_source: NuisanceSource::NoisyTruth,
            projection: ProjectionSettings::default(),
            k_folds: 2,
            nuisance_basis: Basis::Polynomial { degree: 2 },
            threads: None,
            max_failure_fraction: 0.01,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 || self.n == 0 {
            return Err(Error::InvalidSpec {
                reason: "n_reps and n must be at least 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.eval_x) {
            return Err(Error::InvalidSpec {
                reason: format!("eval_x = {} outside [0, 1]", self.eval_x),
            });
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidSpec {
                reason: "at least one target required".into(),
            });
        }
        Ok(())
    }

    fn noise_spec(&self, alpha: f64) -> NoiseSpec {
        NoiseSpec {
            alpha_rate: alpha,
            c1: self.c1,
            c2: self.c2,
            n: self.n,
            mode: self.noise_mode,
        }
    }
}

/// One row of the simulation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub target: Target,
    pub alpha_rate: f64,
    pub truth: f64,
    pub bias: f64,
    pub rmse: f64,
    pub coverage: f64,
    pub mc_se_coverage: f64,
    pub n_fail: usize,
    /// Empirical standard deviation of the point estimates.
    pub emp_sd: f64,
    /// Mean sandwich standard error of the point estimates.
    pub mean_se: f64,
}

/// Aggregated simulation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rows: Vec<ReportRow>,
    pub n_reps: usize,
    /// Exact coefficient additivity `beta(zeta) = beta(delta) - beta(psi)`
    /// held in every successful replicate.
    pub additivity_exact: bool,
}

impl SimulationReport {
    pub fn row(&self, target: Target, alpha: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.target == target && r.alpha_rate == alpha)
    }
}

/// Per-target outcome of one replicate.
#[derive(Debug, Clone, Copy)]
pub struct TargetEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub se: f64,
}

/// One replicate's fits and interval evaluations, in `Target::ALL` order.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub fits: TargetFits,
    pub estimates: [TargetEstimate; 3],
}

/// Run one replicate: sample records, build the nuisance model, compute
/// pseudo-outcomes, solve the three projections, and evaluate at `eval_x`.
pub fn replicate(
    dgp: &DgpSpec,
    config: &SimulationConfig,
    alpha: f64,
    rep_seed: u64,
) -> Result<Replicate> {
    let records = world::sample_records(dgp, config.n, rep_seed);
    let model = match config.nuisance_source {
        NuisanceSource::NoisyTruth => NuisanceModel::exact(*dgp).perturb(
            config.noise_spec(alpha),
            math::derive_seed(rep_seed, stream::NOISE, 0),
        ),
        NuisanceSource::Fitted => {
            let cf = CrossFitNuisances::fit(
                &records,
                &config.nuisance_basis,
                config.k_folds,
                math::derive_seed(rep_seed, stream::FOLDS, 0),
            )?;
            NuisanceModel::fitted(cf)
        }
    };
    let k_folds = match config.nuisance_source {
        NuisanceSource::NoisyTruth => 1,
        NuisanceSource::Fitted => config.k_folds,
    };
    fit_records(&records, &model, &config.projection, config.eval_x, k_folds)
}

/// Pseudo-outcome computation plus the three projection fits for a record
/// set under a given nuisance model.
pub fn fit_records(
    records: &[world::ObservedRecord],
    model: &NuisanceModel,
    settings: &ProjectionSettings,
    eval_x: f64,
    k_folds: usize,
) -> Result<Replicate> {
    let k = settings.basis.len(1);
    let n = records.len();
    let mut design = Vec::with_capacity(n * k);
    let mut w = Vec::with_capacity(n);
    let mut phi_psi = Vec::with_capacity(n);
    let mut phi_delta = Vec::with_capacity(n);
    let mut feat = Vec::with_capacity(k);
    for (i, o) in records.iter().enumerate() {
        let nu = model.at_scalar(o.x, i as u64);
        phi_psi.push(eif::phi_psi(o, &nu)?.value);
        phi_delta.push(eif::phi_delta(o, &nu)?.value);
        let xs = [o.x];
        settings.basis.eval_into(&xs, &mut feat);
        design.extend_from_slice(&feat);
        w.push(settings.weight.eval(&xs));
    }
    let fits = projection::fit_three(&design, k, &w, &phi_psi, &phi_delta, k_folds)?;
    let xs = [eval_x];
    let estimates = [Target::Psi, Target::Delta, Target::Zeta].map(|t| {
        let fit = fits.get(t);
        let pm = ProjectionModel {
            basis: settings.basis,
            weight: settings.weight,
            target: t,
        };
        let (estimate, lower, upper) = projection::predict_ci(fit, &pm, &xs, settings.level);
        let se = projection::predict_se(fit, &pm, &xs);
        TargetEstimate {
            estimate,
            lower,
            upper,
            se,
        }
    });
    Ok(Replicate { fits, estimates })
}

fn estimate_for(rep: &Replicate, target: Target) -> TargetEstimate {
    match target {
        Target::Psi => rep.estimates[0],
        Target::Delta => rep.estimates[1],
        Target::Zeta => rep.estimates[2],
    }
}

/// Truth values `g(eval_x; beta_0)` per configured target.
pub fn truth_at_eval(dgp: &DgpSpec, config: &SimulationConfig) -> Result<Vec<(Target, f64)>> {
    let seed = math::derive_seed(config.master_seed, stream::TRUTH_POP, 0);
    config
        .targets
        .iter()
        .map(|&t| {
            let pm = ProjectionModel {
                basis: config.projection.basis,
                weight: config.projection.weight,
                target: t,
            };
            let beta = projection::true_projection(dgp, &pm, config.pop_size_truth, seed)?;
            Ok((t, projection::eval_linear(&pm, &beta, config.eval_x)))
        })
        .collect()
}

fn run_inner(dgp: &DgpSpec, config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    dgp.validate()?;
    let truths = truth_at_eval(dgp, config)?;

    let mut rows = Vec::new();
    let mut additivity_exact = true;
    for (alpha_idx, &alpha) in config.alpha_rates.iter().enumerate() {
        let alpha_master =
            math::derive_seed(config.master_seed, stream::REPLICATE, alpha_idx as u64);
        // Replicates indexed deterministically; failures carry their message.
        let mut results: Vec<std::result::Result<Replicate, String>> =
            Vec::with_capacity(config.n_reps);
        math::par_chunked(
            config.n_reps,
            |range| {
                range
                    .map(|r| {
                        let rep_seed = math::derive_seed(alpha_master, stream::REPLICATE, r as u64);
                        replicate(dgp, config, alpha, rep_seed).map_err(|e| e.to_string())
                    })
                    .collect::<Vec<_>>()
            },
            |chunk| results.extend(chunk),
        );

        let n_fail = results.iter().filter(|r| r.is_err()).count();
        let limit = (config.max_failure_fraction * config.n_reps as f64).floor() as usize;
        if n_fail > limit {
            let first = results
                .iter()
                .find_map(|r| r.as_ref().err().cloned())
                .unwrap_or_default();
            return Err(Error::TooManyFailures {
                failed: n_fail,
                total: config.n_reps,
                limit,
                first,
            });
        }

        let oks: Vec<&Replicate> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
        for rep in &oks {
            for a in 0..rep.fits.psi.k() {
                if rep.fits.zeta.beta[a].to_bits()
                    != (rep.fits.delta.beta[a] - rep.fits.psi.beta[a]).to_bits()
                {
                    additivity_exact = false;
                }
            }
        }

        for &(target, truth) in &truths {
            let ests: Vec<TargetEstimate> =
                oks.iter().map(|rep| estimate_for(rep, target)).collect();
            let n_ok = ests.len() as f64;
            let mean = ests.iter().map(|e| e.estimate).sum::<f64>() / n_ok;
            let bias = mean - truth;
            let rmse = (ests
                .iter()
                .map(|e| (e.estimate - truth) * (e.estimate - truth))
                .sum::<f64>()
                / n_ok)
                .sqrt();
            let covered = ests
                .iter()
                .filter(|e| e.lower <= truth && truth <= e.upper)
                .count() as f64;
            let coverage = covered / n_ok;
            let mc_se_coverage = (coverage * (1.0 - coverage) / n_ok).sqrt();
            let emp_var = ests
                .iter()
                .map(|e| (e.estimate - mean) * (e.estimate - mean))
                .sum::<f64>()
                / (n_ok - 1.0).max(1.0);
            let mean_se = ests.iter().map(|e| e.se).sum::<f64>() / n_ok;
            rows.push(ReportRow {
                target,
                alpha_rate: alpha,
                truth,
                bias,
                rmse,
                coverage,
                mc_se_coverage,
                n_fail,
                emp_sd: emp_var.sqrt(),
                mean_se,
            });
        }
    }
    Ok(SimulationReport {
        rows,
        n_reps: config.n_reps,
        additivity_exact,
    })
}

/// Run the configured study. A `threads` cap scopes the whole run to a local
/// pool of that size.
pub fn run(dgp: &DgpSpec, config: &SimulationConfig) -> Result<SimulationReport> {
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidSpec {
                    reason: format!("thread pool: {e}"),
                })?;
            pool.install(|| run_inner(dgp, config))
        }
        None => run_inner(dgp, config),
    }
}

/// One grid point of the curve sweep.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub x: f64,
    pub nuisance: NuisanceAt,
    pub estimands: EstimandValues,
    /// E[Y(1) - Y(0) | x], the outcome risk difference.
    pub ate_outcome: f64,
    /// E[M(1) - M(0) | x], the mediator risk difference.
    pub ate_mediator: f64,
}

/// Curves plus the population linear projections of the three main targets.
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub points: Vec<CurvePoint>,
    pub proj_psi: Vec<f64>,
    pub proj_delta: Vec<f64>,
    pub proj_zeta: Vec<f64>,
    /// Smallest covariate where the indirect probability crosses one half,
    /// if it does on the grid.
    pub psi_half_crossing: Option<f64>,
}

impl CurveTable {
    pub fn projection_value(&self, target: Target, basis: &Basis, x: f64) -> f64 {
        let beta = match target {
            Target::Psi => &self.proj_psi,
            Target::Delta => &self.proj_delta,
            Target::Zeta => &self.proj_zeta,
        };
        basis.eval(&[x]).iter().zip(beta).map(|(b, c)| b * c).sum()
    }
}

/// Evaluate nuisances, estimands, and projections over a covariate grid.
///
/// The projections are the population least-squares coefficients under a
/// uniform covariate, computed by Gauss-Legendre quadrature (deterministic,
/// no sampling); they agree with [`projection::true_projection`] up to its
/// Monte-Carlo error.
pub fn curve_sweep(dgp: &DgpSpec, grid: &[f64], basis: &Basis) -> Result<CurveTable> {
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid {
        let nu = world::true_nuisance(dgp, x)?;
        let est = estimand::identify_all(&nu)?;
        points.push(CurvePoint {
            x,
            nuisance: nu,
            estimands: est,
            ate_outcome: nu.marginal_mu(true) - nu.marginal_mu(false),
            ate_mediator: nu.gamma1 - nu.gamma0,
        });
    }

    let k = basis.len(1);
    let nodes = math::gauss_legendre_unit(128);
    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = [
        nalgebra::DVector::<f64>::zeros(k),
        nalgebra::DVector::<f64>::zeros(k),
        nalgebra::DVector::<f64>::zeros(k),
    ];
    let mut feat = Vec::with_capacity(k);
    for &(x, wq) in &nodes {
        let nu = world::true_nuisance(dgp, x)?;
        let est = estimand::identify_all(&nu)?;
        basis.eval_into(&[x], &mut feat);
        for a in 0..k {
            for b in 0..k {
                gram[(a, b)] += wq * feat[a] * feat[b];
            }
            rhs[0][a] += wq * feat[a] * est.psi;
            rhs[1][a] += wq * feat[a] * est.delta;
            rhs[2][a] += wq * feat[a] * est.zeta;
        }
    }
    let lu = gram.lu();
    let solve = |v: &nalgebra::DVector<f64>| -> Result<Vec<f64>> {
        Ok(lu
            .solve(v)
            .ok_or(Error::SingularDesign)?
            .iter()
            .copied()
            .collect())
    };
    let proj_psi = solve(&rhs[0])?;
    let proj_delta = solve(&rhs[1])?;
    let proj_zeta = solve(&rhs[2])?;

    let mut psi_half_crossing = None;
    for pair in points.windows(2) {
        let (p0, p1) = (&pair[0], &pair[1]);
        let (f0, f1) = (p0.estimands.psi - 0.5, p1.estimands.psi - 0.5);
        if f0 == 0.0 {
            psi_half_crossing = Some(p0.x);
            break;
        }
        if f0 * f1 < 0.0 {
            psi_half_crossing = Some(p0.x + (p1.x - p0.x) * f0 / (f0 - f1));
            break;
        }
    }

    Ok(CurveTable {
        points,
        proj_psi,
        proj_delta,
        proj_zeta,
        psi_half_crossing,
    })
}
