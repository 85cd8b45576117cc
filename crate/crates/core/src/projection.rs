//! Projection of pseudo-outcomes onto a working model.
//!
//! The projection parameter solves the weighted moment condition
//!
//! ```text
//! P_n[ dg/dbeta(X) * w(X) * (phi(O) - g(X; beta)) ] = 0
//! ```
//!
//! For linear `g(x; beta) = b(x)'beta` this is weighted least squares of the
//! pseudo-outcome on the basis, solved in closed form. Inference uses the
//! sandwich covariance `M^-1 E[phi phi'] M^-T` with `M` the moment
//! derivative; pointwise intervals for `g(x; beta_hat)` follow by the delta
//! method. A damped Newton path handles nonlinear working models.
//!
//! All record-level accumulations run over fixed index chunks combined in
//! order, so results are identical across thread counts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::eif::Target;
use crate::error::{Error, Result};
use crate::math::{self, normal_quantile, stream, KahanSum};
use crate::world::DgpSpec;

/// Weighting scheme over the covariate space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// Every covariate point contributes equally.
    #[default]
    Uniform,
    /// Indicator of a covariate window on the first coordinate.
    Window { lo: f64, hi: f64 },
}

impl Weight {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::Uniform => 1.0,
            Weight::Window { lo, hi } => {
                if (lo..=hi).contains(&x[0]) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Working model: basis, weights, and the target the fit tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub basis: Basis,
    pub weight: Weight,
    pub target: Target,
}

impl ProjectionModel {
    pub fn linear(target: Target) -> Self {
        Self {
            basis: Basis::default(),
            weight: Weight::Uniform,
            target,
        }
    }
}

/// A solved projection with its sandwich pieces.
///
/// `vcov` is the asymptotic covariance of `sqrt(n) (beta_hat - beta)`; the
/// covariance of `beta_hat` itself is `vcov / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionFit {
    pub target: Target,
    pub beta: Vec<f64>,
    pub vcov: Vec<Vec<f64>>,
    pub bread: Vec<Vec<f64>>,
    pub meat: Vec<Vec<f64>>,
    pub n: usize,
    pub k_folds: usize,
}

impl ProjectionFit {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    /// Covariance of `beta_hat` (vcov scaled by 1/n).
    pub fn beta_cov(&self, a: usize, b: usize) -> f64 {
        self.vcov[a][b] / self.n as f64
    }
}

fn to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|a| (0..m.ncols()).map(|b| m[(a, b)]).collect())
        .collect()
}

/// Accumulate the weighted Gram matrix and right-hand side deterministically.
fn gram_rhs(design: &[f64], k: usize, w: &[f64], phi: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = w.len();
    struct Partial {
        gram: Vec<f64>,
        rhs: Vec<f64>,
    }
    let mut gram_acc = vec![KahanSum::default(); k * k];
    let mut rhs_acc = vec![KahanSum::default(); k];
    math::par_chunked(
        n,
        |range| {
            let mut gram = vec![0.0; k * k];
            let mut rhs = vec![0.0; k];
            for i in range {
                let wi = w[i];
                if wi == 0.0 {
                    continue;
                }
                let row = &design[i * k..(i + 1) * k];
                for a in 0..k {
                    rhs[a] += wi * row[a] * phi[i];
                    for b in a..k {
                        gram[a * k + b] += wi * row[a] * row[b];
                    }
                }
            }
            Partial { gram, rhs }
        },
        |p: Partial| {
            for (acc, v) in gram_acc.iter_mut().zip(&p.gram) {
                acc.add(*v);
            }
            for (acc, v) in rhs_acc.iter_mut().zip(&p.rhs) {
                acc.add(*v);
            }
        },
    );
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = gram_acc[a * k + b].value();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let rhs = DVector::from_iterator(k, rhs_acc.iter().map(KahanSum::value));
    (gram, rhs)
}

/// Sandwich pieces at a solved `beta`: `bread = -(1/n) sum w b b'` and
/// `meat = (1/n) sum s s'` with `s = w b (phi - b'beta)`.
fn sandwich_parts(
    design: &[f64],
    k: usize,
    w: &[f64],
    phi: &[f64],
    beta: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = w.len();
    struct Partial {
        bread: Vec<f64>,
        meat: Vec<f64>,
    }
    let mut bread_acc = vec![KahanSum::default(); k * k];
    let mut meat_acc = vec![KahanSum::default(); k * k];
    math::par_chunked(
        n,
        |range| {
            let mut bread = vec![0.0; k * k];
            let mut meat = vec![0.0; k * k];
            for i in range {
                let wi = w[i];
                if wi == 0.0 {
                    continue;
                }
                let row = &design[i * k..(i + 1) * k];
                let fitted: f64 = row.iter().zip(beta).map(|(b, c)| b * c).sum();
                let r = wi * (phi[i] - fitted);
                for a in 0..k {
                    for b in a..k {
                        bread[a * k + b] += wi * row[a] * row[b];
                        meat[a * k + b] += (row[a] * r) * (row[b] * r);
                    }
                }
            }
            Partial { bread, meat }
        },
        |p: Partial| {
            for (acc, v) in bread_acc.iter_mut().zip(&p.bread) {
                acc.add(*v);
            }
            for (acc, v) in meat_acc.iter_mut().zip(&p.meat) {
                acc.add(*v);
            }
        },
    );
    let nf = n as f64;
    let mut bread = DMatrix::<f64>::zeros(k, k);
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let bb = -bread_acc[a * k + b].value() / nf;
            let mm = meat_acc[a * k + b].value() / nf;
            bread[(a, b)] = bb;
            bread[(b, a)] = bb;
            meat[(a, b)] = mm;
            meat[(b, a)] = mm;
        }
    }
    (bread, meat)
}

fn sandwich_vcov(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = bread.clone().try_inverse().ok_or(Error::SingularBread)?;
    Ok(&inv * meat * inv.transpose())
}

/// Closed-form weighted least squares of the pseudo-outcome on the basis.
pub fn solve_linear(
    target: Target,
    design: &[f64],
    k: usize,
    w: &[f64],
    phi: &[f64],
    k_folds: usize,
) -> Result<ProjectionFit> {
    let n = w.len();
    assert_eq!(design.len(), n * k);
    assert_eq!(phi.len(), n);
    if n <= k {
        return Err(Error::SingularDesign);
    }
    let (gram, rhs) = gram_rhs(design, k, w, phi);
    let beta_v = gram.clone().lu().solve(&rhs).ok_or(Error::SingularDesign)?;
    let beta: Vec<f64> = beta_v.iter().copied().collect();
    let (bread, meat) = sandwich_parts(design, k, w, phi, &beta);
    let vcov = sandwich_vcov(&bread, &meat)?;
    Ok(ProjectionFit {
        target,
        beta,
        vcov: to_nested(&vcov),
        bread: to_nested(&bread),
        meat: to_nested(&meat),
        n,
        k_folds,
    })
}

/// A nonlinear working model `g(x; beta)` with its gradient in `beta`.
pub trait WorkingModel {
    fn value(&self, features: &[f64], beta: &[f64]) -> f64;
    fn gradient(&self, features: &[f64], beta: &[f64], out: &mut [f64]);
    fn n_params(&self) -> usize;
}

/// `g(x; beta) = expit(b(x)'beta)`; a bounded working model for probabilities.
pub struct ExpitLinear {
    pub k: usize,
}

impl WorkingModel for ExpitLinear {
    fn value(&self, features: &[f64], beta: &[f64]) -> f64 {
        math::expit(features.iter().zip(beta).map(|(b, c)| b * c).sum())
    }
    fn gradient(&self, features: &[f64], beta: &[f64], out: &mut [f64]) {
        let g = self.value(features, beta);
        let d = g * (1.0 - g);
        for (o, b) in out.iter_mut().zip(features) {
            *o = d * b;
        }
    }
    fn n_params(&self) -> usize {
        self.k
    }
}

const NONLINEAR_TOL: f64 = 1e-10;
const NONLINEAR_MAX_ITER: usize = 200;

/// Damped Newton iteration on the empirical moment for a nonlinear `g`,
/// using the Gauss-Newton derivative `-sum w grad grad'`.
pub fn solve_nonlinear<Gm: WorkingModel>(
    model: &Gm,
    design: &[f64],
    k: usize,
    w: &[f64],
    phi: &[f64],
    init: &[f64],
) -> Result<Vec<f64>> {
    let n = w.len();
    let p = model.n_params();
    let mut beta = init.to_vec();
    let mut grad_buf = vec![0.0; p];
    let moment_norm = |beta: &[f64], grad_buf: &mut [f64]| -> (DVector<f64>, DMatrix<f64>) {
        let mut m = DVector::<f64>::zeros(p);
        let mut jac = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let row = &design[i * k..(i + 1) * k];
            let g = model.value(row, beta);
            model.gradient(row, beta, grad_buf);
            let r = w[i] * (phi[i] - g);
            for a in 0..p {
                m[a] += grad_buf[a] * r;
                for b in 0..p {
                    jac[(a, b)] -= w[i] * grad_buf[a] * grad_buf[b];
                }
            }
        }
        (m, jac)
    };
    let mut last_step = f64::INFINITY;
    for iter in 0..NONLINEAR_MAX_ITER {
        let (m, jac) = moment_norm(&beta, &mut grad_buf);
        let step = jac.lu().solve(&m).ok_or(Error::SingularDesign)?;
        last_step = step.amax();
        if last_step < NONLINEAR_TOL {
            return Ok(beta);
        }
        let m0 = m.norm();
        let mut scale = 1.0;
        for _ in 0..30 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b - s * scale)
                .collect();
            let (mc, _) = moment_norm(&cand, &mut grad_buf);
            if mc.norm() <= m0 {
                beta = cand;
                break;
            }
            scale *= 0.5;
        }
        if iter + 1 == NONLINEAR_MAX_ITER {
            break;
        }
    }
    Err(Error::ConvergenceFailure {
        context: "nonlinear projection",
        iterations: NONLINEAR_MAX_ITER,
        last_step,
    })
}

/// Point estimate and normal-quantile confidence interval for
/// `g(x; beta_hat) = b(x)'beta_hat`.
pub fn predict_ci(
    fit: &ProjectionFit,
    model: &ProjectionModel,
    x: &[f64],
    level: f64,
) -> (f64, f64, f64) {
    let b = model.basis.eval(x);
    let est: f64 = b.iter().zip(&fit.beta).map(|(bi, c)| bi * c).sum();
    let mut var = 0.0;
    for a in 0..fit.k() {
        for c in 0..fit.k() {
            var += b[a] * fit.beta_cov(a, c) * b[c];
        }
    }
    let se = var.max(0.0).sqrt();
    let z = normal_quantile(0.5 + level / 2.0);
    (est, est - z * se, est + z * se)
}

/// Standard error of `g(x; beta_hat)`.
pub fn predict_se(fit: &ProjectionFit, model: &ProjectionModel, x: &[f64]) -> f64 {
    let b = model.basis.eval(x);
    let mut var = 0.0;
    for a in 0..fit.k() {
        for c in 0..fit.k() {
            var += b[a] * fit.beta_cov(a, c) * b[c];
        }
    }
    var.max(0.0).sqrt()
}

/// Fits for all three targets with shared basis, weights, and records.
///
/// Indirect and total are solved by weighted least squares; the direct fit's
/// coefficients are the exact difference `beta(delta) - beta(psi)`, which
/// keeps the three reports additive to the bit. The direct fit's sandwich is
/// computed from its own pseudo-outcomes `phi_delta - phi_psi`.
#[derive(Debug, Clone)]
pub struct TargetFits {
    pub psi: ProjectionFit,
    pub delta: ProjectionFit,
    pub zeta: ProjectionFit,
}

impl TargetFits {
    pub fn get(&self, target: Target) -> &ProjectionFit {
        match target {
            Target::Psi => &self.psi,
            Target::Delta => &self.delta,
            Target::Zeta => &self.zeta,
        }
    }
}

pub fn fit_three(
    design: &[f64],
    k: usize,
    w: &[f64],
    phi_psi: &[f64],
    phi_delta: &[f64],
    k_folds: usize,
) -> Result<TargetFits> {
    let psi = solve_linear(Target::Psi, design, k, w, phi_psi, k_folds)?;
    let delta = solve_linear(Target::Delta, design, k, w, phi_delta, k_folds)?;
    let beta: Vec<f64> = delta
        .beta
        .iter()
        .zip(&psi.beta)
        .map(|(d, p)| d - p)
        .collect();
    let phi_zeta: Vec<f64> = phi_delta.iter().zip(phi_psi).map(|(d, p)| d - p).collect();
    let (bread, meat) = sandwich_parts(design, k, w, &phi_zeta, &beta);
    let vcov = sandwich_vcov(&bread, &meat)?;
    let zeta = ProjectionFit {
        target: Target::Zeta,
        beta,
        vcov: to_nested(&vcov),
        bread: to_nested(&bread),
        meat: to_nested(&meat),
        n: w.len(),
        k_folds,
    };
    Ok(TargetFits { psi, delta, zeta })
}

/// Population-truth projection: draw `pop_size` covariates, evaluate the
/// exact estimand through the identification formulas on true nuisances, and
/// solve the same weighted least squares. Errors surface any positivity
/// failure of the generating process.
pub fn true_projection(
    spec: &DgpSpec,
    model: &ProjectionModel,
    pop_size: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let k = model.basis.len(1);
    struct Partial {
        gram: Vec<f64>,
        rhs: Vec<f64>,
        err: Option<Error>,
    }
    let mut gram_acc = vec![KahanSum::default(); k * k];
    let mut rhs_acc = vec![KahanSum::default(); k];
    let mut first_err: Option<Error> = None;
    math::par_chunked(
        pop_size,
        |range| {
            let mut gram = vec![0.0; k * k];
            let mut rhs = vec![0.0; k];
            let mut feat = Vec::with_capacity(k);
            for i in range {
                use rand::Rng;
                let mut rng = math::unit_rng(seed, stream::TRUTH_POP, i as u64);
                let x: f64 = rng.gen();
                let nu = match crate::world::true_nuisance(spec, x) {
                    Ok(nu) => nu,
                    Err(e) => {
                        return Partial {
                            gram,
                            rhs,
                            err: Some(e),
                        }
                    }
                };
                let values = match crate::estimand::identify_all(&nu) {
                    Ok(v) => v,
                    Err(e) => {
                        return Partial {
                            gram,
                            rhs,
                            err: Some(e),
                        }
                    }
                };
                let y = model.target.value_of(&values);
                let xs = [x];
                let wi = model.weight.eval(&xs);
                if wi == 0.0 {
                    continue;
                }
                model.basis.eval_into(&xs, &mut feat);
                for a in 0..k {
                    rhs[a] += wi * feat[a] * y;
                    for b in a..k {
                        gram[a * k + b] += wi * feat[a] * feat[b];
                    }
                }
            }
            Partial {
                gram,
                rhs,
                err: None,
            }
        },
        |p: Partial| {
            if let Some(e) = p.err {
                first_err.get_or_insert(e);
            }
            for (acc, v) in gram_acc.iter_mut().zip(&p.gram) {
                acc.add(*v);
            }
            for (acc, v) in rhs_acc.iter_mut().zip(&p.rhs) {
                acc.add(*v);
            }
        },
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = gram_acc[a * k + b].value();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let rhs = DVector::from_iterator(k, rhs_acc.iter().map(KahanSum::value));
    let beta = gram.lu().solve(&rhs).ok_or(Error::SingularDesign)?;
    Ok(beta.iter().copied().collect())
}

/// Evaluate a linear working model at a scalar covariate.
pub fn eval_linear(model: &ProjectionModel, beta: &[f64], x: f64) -> f64 {
    model
        .basis
        .eval(&[x])
        .iter()
        .zip(beta)
        .map(|(b, c)| b * c)
        .sum()
}
