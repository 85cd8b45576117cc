//! Nuisance function models.
//!
//! Three provenances feed the estimator:
//!
//! * **exact** — the generating process's own conditional probabilities;
//! * **noisy** — exact values with rate-controlled gaussian noise injected on
//!   the logit scale, emulating nuisances estimated at `n^(-alpha)` rates;
//! * **fitted** — cross-fitted logistic regressions on observed records.
//!
//! Every emitted probability is clamped to `[1e-3, 1 - 1e-3]` so downstream
//! risk ratios and inverse-probability weights stay finite.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::estimand::NuisanceAt;
use crate::math::{self, expit, logit, stream};
use crate::world::{DgpSpec, ObservedRecord};

/// Clamp applied to every model-emitted probability.
pub const MODEL_CLAMP: f64 = 1e-3;

/// Number of nuisance components.
pub const N_COMPONENTS: usize = 7;

/// Index order of the seven components everywhere in this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Pi = 0,
    Gamma0 = 1,
    Gamma1 = 2,
    Mu00 = 3,
    Mu01 = 4,
    Mu10 = 5,
    Mu11 = 6,
}

impl Component {
    pub const ALL: [Component; N_COMPONENTS] = [
        Component::Pi,
        Component::Gamma0,
        Component::Gamma1,
        Component::Mu00,
        Component::Mu01,
        Component::Mu10,
        Component::Mu11,
    ];

    /// Records entering this component's fit.
    pub fn selects(&self, a: bool, m: bool) -> bool {
        match self {
            Component::Pi => true,
            Component::Gamma0 => !a,
            Component::Gamma1 => a,
            Component::Mu00 => !a && !m,
            Component::Mu01 => !a && m,
            Component::Mu10 => a && !m,
            Component::Mu11 => a && m,
        }
    }

    /// Response variable of this component's fit.
    pub fn response(&self, a: bool, m: bool, y: bool) -> bool {
        match self {
            Component::Pi => a,
            Component::Gamma0 | Component::Gamma1 => m,
            _ => y,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Component::Pi => "pi",
            Component::Gamma0 => "gamma0",
            Component::Gamma1 => "gamma1",
            Component::Mu00 => "mu00",
            Component::Mu01 => "mu01",
            Component::Mu10 => "mu10",
            Component::Mu11 => "mu11",
        }
    }
}

/// How noise is attached to a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// A fresh draw per (record, component); the default.
    PerPoint,
    /// One draw per component, applied everywhere (a function-level shift).
    FunctionShift,
}

/// Rate-controlled gaussian noise on the logit scale: component `j` receives
/// `Normal(c1[j] * n^-alpha, c2[j] * n^-2alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha_rate: f64,
    pub c1: [f64; N_COMPONENTS],
    pub c2: [f64; N_COMPONENTS],
    /// Sample size driving the rate.
    pub n: usize,
    pub mode: NoiseMode,
}

impl NoiseSpec {
    /// All constants equal to one, per-point mode.
    pub fn uniform(alpha_rate: f64, n: usize) -> Self {
        Self {
            alpha_rate,
            c1: [1.0; N_COMPONENTS],
            c2: [1.0; N_COMPONENTS],
            n,
            mode: NoiseMode::PerPoint,
        }
    }

    /// No noise at all (c1 = c2 = 0).
    pub fn zero(n: usize) -> Self {
        Self {
            alpha_rate: 0.3,
            c1: [0.0; N_COMPONENTS],
            c2: [0.0; N_COMPONENTS],
            n,
            mode: NoiseMode::PerPoint,
        }
    }

    /// Noise mean for component `j`: `c1[j] * n^-alpha`.
    pub fn mean(&self, j: usize) -> f64 {
        self.c1[j] * (self.n as f64).powf(-self.alpha_rate)
    }

    /// Noise standard deviation for component `j`: `sqrt(c2[j]) * n^-alpha`.
    pub fn sd(&self, j: usize) -> f64 {
        self.c2[j].sqrt() * (self.n as f64).powf(-self.alpha_rate)
    }
}

/// Where a model's values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Noisy,
    Fitted,
}

#[derive(Debug, Clone)]
enum BaseEval {
    Dgp(DgpSpec),
    Fitted(CrossFitNuisances),
}

#[derive(Debug, Clone)]
struct NoiseLayer {
    spec: NoiseSpec,
    seed: u64,
    /// Pre-drawn per-component shifts for `FunctionShift` mode.
    shifts: Option<[f64; N_COMPONENTS]>,
}

/// A nuisance evaluator: covariate point (plus unit index, for reproducible
/// per-point noise) to the seven probabilities.
#[derive(Debug, Clone)]
pub struct NuisanceModel {
    base: BaseEval,
    noise: Option<NoiseLayer>,
    pub provenance: Provenance,
}

impl NuisanceModel {
    /// The generating process's own conditional probabilities.
    pub fn exact(spec: DgpSpec) -> Self {
        Self {
            base: BaseEval::Dgp(spec),
            noise: None,
            provenance: Provenance::Exact,
        }
    }

    /// Cross-fitted logistic models.
    pub fn fitted(fits: CrossFitNuisances) -> Self {
        Self {
            base: BaseEval::Fitted(fits),
            noise: None,
            provenance: Provenance::Fitted,
        }
    }

    /// Attach (or replace) a noise layer. For `FunctionShift` mode, the seven
    /// shifts are drawn here, once.
    pub fn perturb(mut self, spec: NoiseSpec, seed: u64) -> Self {
        let shifts = match spec.mode {
            NoiseMode::PerPoint => None,
            NoiseMode::FunctionShift => {
                let mut rng = math::unit_rng(seed, stream::FUNCTION_SHIFT, 0);
                let mut s = [0.0; N_COMPONENTS];
                for (j, slot) in s.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *slot = spec.mean(j) + spec.sd(j) * z;
                }
                Some(s)
            }
        };
        self.noise = Some(NoiseLayer { spec, seed, shifts });
        self.provenance = Provenance::Noisy;
        self
    }

    /// A deterministic constant logit shift on a single component; used to
    /// probe orthogonality of the influence functions.
    pub fn with_logit_shift(self, component: Component, eps: f64) -> Self {
        let mut c1 = [0.0; N_COMPONENTS];
        c1[component as usize] = eps;
        let spec = NoiseSpec {
            alpha_rate: 0.0,
            c1,
            c2: [0.0; N_COMPONENTS],
            n: 1,
            mode: NoiseMode::FunctionShift,
        };
        self.perturb(spec, 0)
    }

    fn base_values(&self, x: &[f64], unit: u64) -> [f64; N_COMPONENTS] {
        match &self.base {
            BaseEval::Dgp(spec) => {
                let nu = crate::world::true_nuisance(spec, x[0].clamp(0.0, 1.0))
                    .expect("clamped covariate is in domain");
                [
                    nu.pi, nu.gamma0, nu.gamma1, nu.mu00, nu.mu01, nu.mu10, nu.mu11,
                ]
            }
            BaseEval::Fitted(fits) => fits.values_for_unit(x, unit),
        }
    }

    /// Evaluate at a covariate vector. `unit` selects both the per-point noise
    /// stream and, for cross-fitted models, the held-out fold.
    pub fn at(&self, x: &[f64], unit: u64) -> NuisanceAt {
        let mut v = self.base_values(x, unit);
        if let Some(layer) = &self.noise {
            match layer.spec.mode {
                NoiseMode::PerPoint => {
                    let mut rng = math::unit_rng(layer.seed, stream::NOISE, unit);
                    for (j, vj) in v.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        let eps = layer.spec.mean(j) + layer.spec.sd(j) * z;
                        if eps != 0.0 {
                            *vj = expit(logit(*vj) + eps);
                        }
                    }
                }
                NoiseMode::FunctionShift => {
                    let shifts = layer.shifts.as_ref().expect("shifts drawn in perturb");
                    for (vj, &eps) in v.iter_mut().zip(shifts) {
                        if eps != 0.0 {
                            *vj = expit(logit(*vj) + eps);
                        }
                    }
                }
            }
        }
        for vj in v.iter_mut() {
            *vj = math::clamp_prob(*vj, MODEL_CLAMP);
        }
        NuisanceAt::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }

    /// Scalar-covariate convenience.
    #[inline]
    pub fn at_scalar(&self, x: f64, unit: u64) -> NuisanceAt {
        self.at(std::slice::from_ref(&x), unit)
    }
}

/// One fitted logistic curve: `expit(basis(x) . coef)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitFit {
    pub coef: Vec<f64>,
    /// Inverse observed information at the optimum (coefficient covariance).
    pub cov: Vec<Vec<f64>>,
    pub iterations: usize,
    pub n_obs: usize,
}

impl LogitFit {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let eta: f64 = features.iter().zip(&self.coef).map(|(b, c)| b * c).sum();
        math::clamp_prob(expit(eta), MODEL_CLAMP)
    }

    /// Standard error of coefficient `j`.
    pub fn se(&self, j: usize) -> f64 {
        self.cov[j][j].sqrt()
    }
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_RIDGE: f64 = 1e-8;

fn bernoulli_loglik(p: f64, y: f64) -> f64 {
    y * p.ln() + (1.0 - y) * (1.0 - p).ln()
}

/// Maximum-likelihood logistic regression via damped Newton iterations.
///
/// `rows` is row-major with `k` features per row. The Hessian solve falls
/// back to a ridge of 1e-8 on singularity. Fails with
/// [`Error::ConvergenceFailure`] after 100 iterations.
pub fn fit_logit_design(rows: &[f64], k: usize, y: &[bool]) -> Result<LogitFit> {
    use nalgebra::{DMatrix, DVector};
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptySubset {
            context: "logistic fit",
        });
    }
    assert_eq!(rows.len(), n * k);

    let mut coef = DVector::<f64>::zeros(k);
    let mut eta = vec![0.0; n];
    let loglik = |eta: &[f64]| -> f64 {
        let mut ll = 0.0;
        for (e, &yi) in eta.iter().zip(y) {
            let p = expit(*e).clamp(1e-10, 1.0 - 1e-10);
            ll += bernoulli_loglik(p, f64::from(u8::from(yi)));
        }
        ll
    };

    let finish = |coef: &DVector<f64>, hess: DMatrix<f64>, iterations: usize| -> Result<LogitFit> {
        let info = hess + DMatrix::identity(k, k) * NEWTON_RIDGE;
        let cov_m = info.try_inverse().ok_or(Error::SingularDesign)?;
        let cov = (0..k)
            .map(|a| (0..k).map(|b| cov_m[(a, b)]).collect())
            .collect();
        Ok(LogitFit {
            coef: coef.iter().copied().collect(),
            cov,
            iterations,
            n_obs: n,
        })
    };

    let mut last_step = f64::INFINITY;
    for iter in 0..NEWTON_MAX_ITER {
        let mut grad = DVector::<f64>::zeros(k);
        let mut hess = DMatrix::<f64>::zeros(k, k);
        for (i, &yi) in y.iter().enumerate() {
            let row = &rows[i * k..(i + 1) * k];
            let e: f64 = row.iter().zip(coef.iter()).map(|(b, c)| b * c).sum();
            eta[i] = e;
            let p = expit(e).clamp(1e-10, 1.0 - 1e-10);
            let w = p * (1.0 - p);
            let r = f64::from(u8::from(yi)) - p;
            for a in 0..k {
                grad[a] += row[a] * r;
                for b in a..k {
                    hess[(a, b)] += row[a] * row[b] * w;
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }

        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                let ridged = &hess + DMatrix::identity(k, k) * NEWTON_RIDGE;
                ridged.cholesky().ok_or(Error::SingularDesign)?.solve(&grad)
            }
        };

        last_step = step.amax();
        if last_step < NEWTON_TOL {
            return finish(&coef, hess, iter);
        }

        // Damping: halve the step until the log-likelihood strictly improves.
        let ll0 = loglik(&eta);
        let improvement_floor = ll0 + 1e-13 * (1.0 + ll0.abs());
        let mut improved = false;
        let mut scale = 1.0;
        for _ in 0..30 {
            let cand = &coef + &step * scale;
            let mut eta_c = vec![0.0; n];
            for (i, e) in eta_c.iter_mut().enumerate() {
                let row = &rows[i * k..(i + 1) * k];
                *e = row.iter().zip(cand.iter()).map(|(b, c)| b * c).sum();
            }
            if loglik(&eta_c) > improvement_floor {
                coef = cand;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            // Line search stalled: the attainable gain is at roundoff level,
            // so this is the numerical optimum.
            return finish(&coef, hess, iter);
        }
    }
    Err(Error::ConvergenceFailure {
        context: "logistic fit",
        iterations: NEWTON_MAX_ITER,
        last_step,
    })
}

/// Fit one nuisance component on its record subset.
pub fn fit_logit(records: &[ObservedRecord], basis: &Basis, target: Component) -> Result<LogitFit> {
    let k = basis.len(1);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut buf = Vec::with_capacity(k);
    for o in records {
        if target.selects(o.a, o.m) {
            basis.eval_into(std::slice::from_ref(&o.x), &mut buf);
            rows.extend_from_slice(&buf);
            y.push(target.response(o.a, o.m, o.y));
        }
    }
    if y.is_empty() {
        return Err(Error::EmptySubset {
            context: target.name(),
        });
    }
    fit_logit_design(&rows, k, &y)
}

/// All seven components fitted on one training set.
#[derive(Debug, Clone)]
pub struct FittedNuisances {
    pub basis: Basis,
    pub fits: Vec<LogitFit>,
    /// Fold this model was trained away from, if cross-fitted.
    pub held_out_fold: Option<usize>,
}

impl FittedNuisances {
    pub fn fit(records: &[ObservedRecord], basis: &Basis) -> Result<Self> {
        let fits = Component::ALL
            .iter()
            .map(|&c| fit_logit(records, basis, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            basis: *basis,
            fits,
            held_out_fold: None,
        })
    }

    pub fn values_at(&self, x: &[f64]) -> [f64; N_COMPONENTS] {
        let features = self.basis.eval(x);
        let mut v = [0.0; N_COMPONENTS];
        for (j, fit) in self.fits.iter().enumerate() {
            v[j] = fit.predict(&features);
        }
        v
    }
}

/// Per-record fold labels plus the per-fold models trained on the complement.
#[derive(Debug, Clone)]
pub struct CrossFitNuisances {
    pub folds: Vec<usize>,
    pub models: Vec<FittedNuisances>,
}

impl CrossFitNuisances {
    /// Cross-fit all seven components: fold `f`'s model is trained on every
    /// record outside fold `f`.
    pub fn fit(
        records: &[ObservedRecord],
        basis: &Basis,
        k_folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let folds = assign_folds(records.len(), k_folds, seed)?;
        let mut models = Vec::with_capacity(k_folds);
        for f in 0..k_folds {
            let train: Vec<ObservedRecord> = records
                .iter()
                .zip(&folds)
                .filter(|(_, &lab)| lab != f)
                .map(|(r, _)| *r)
                .collect();
            let mut m = FittedNuisances::fit(&train, basis)?;
            m.held_out_fold = Some(f);
            models.push(m);
        }
        Ok(Self { folds, models })
    }

    fn values_for_unit(&self, x: &[f64], unit: u64) -> [f64; N_COMPONENTS] {
        let fold = self.folds[unit as usize];
        self.models[fold].values_at(x)
    }
}

/// Borrowed columns of an observed dataset with `dim`-dimensional covariates
/// stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct ObservedColumns<'a> {
    pub x: &'a [f64],
    pub dim: usize,
    pub a: &'a [bool],
    pub m: &'a [bool],
    pub y: &'a [bool],
}

impl<'a> ObservedColumns<'a> {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn covariates(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Cross-fitted logistic nuisances over explicit covariate rows; the path
/// for observed datasets, which may carry multivariate covariates.
#[derive(Debug, Clone)]
pub struct DesignCrossFit {
    pub folds: Vec<usize>,
    /// One vector of seven fits per fold, trained on the fold's complement.
    models: Vec<Vec<LogitFit>>,
    basis: Basis,
    dim: usize,
}

impl DesignCrossFit {
    pub fn fit(
        data: ObservedColumns<'_>,
        basis: &Basis,
        k_folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = data.len();
        assert_eq!(data.x.len(), n * data.dim);
        let folds = assign_folds(n, k_folds, seed)?;
        let k = basis.len(data.dim);
        let mut models = Vec::with_capacity(k_folds);
        let mut buf = Vec::with_capacity(k);
        for f in 0..k_folds {
            let mut fits = Vec::with_capacity(N_COMPONENTS);
            for comp in Component::ALL {
                let mut rows = Vec::new();
                let mut resp = Vec::new();
                for (i, &fold) in folds.iter().enumerate() {
                    if fold != f && comp.selects(data.a[i], data.m[i]) {
                        basis.eval_into(data.covariates(i), &mut buf);
                        rows.extend_from_slice(&buf);
                        resp.push(comp.response(data.a[i], data.m[i], data.y[i]));
                    }
                }
                if resp.is_empty() {
                    return Err(Error::EmptySubset {
                        context: comp.name(),
                    });
                }
                fits.push(fit_logit_design(&rows, k, &resp)?);
            }
            models.push(fits);
        }
        Ok(Self {
            folds,
            models,
            basis: *basis,
            dim: data.dim,
        })
    }

    /// Nuisance values for record `unit` at its covariate row, from the model
    /// trained away from the unit's fold.
    pub fn nuisance_at(&self, unit: usize, xrow: &[f64]) -> NuisanceAt {
        assert_eq!(xrow.len(), self.dim);
        let features = self.basis.eval(xrow);
        let fits = &self.models[self.folds[unit]];
        let v: Vec<f64> = fits.iter().map(|f| f.predict(&features)).collect();
        NuisanceAt::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }
}

/// Near-equal random partition of `0..n` into `k` folds; deterministic in
/// `(n, k, seed)`.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || n < 2 * k {
        return Err(Error::BadFoldCount { n, k });
    }
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = math::unit_rng(seed, stream::FOLDS, 0);
    order.shuffle(&mut rng);
    let mut labels = vec![0usize; n];
    for (pos, &idx) in order.iter().enumerate() {
        labels[idx] = pos % k;
    }
    Ok(labels)
}
