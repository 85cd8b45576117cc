//! Closed-form identification of the mediated probabilities of causation.
//!
//! Everything in this module is a pure function of the seven conditional
//! probabilities at a single covariate point:
//!
//! * `pi      = P(A = 1 | X = x)`
//! * `gamma_a = P(M = 1 | A = a, X = x)`
//! * `mu_am   = P(Y = 1 | A = a, M = m, X = x)`
//!
//! The identified quantities are risk-ratio expressions; each denominator is
//! protected by a positivity check. Values outside [0, 1] can legitimately
//! arise when the input nuisances violate the monotonicity assumptions of the
//! identification argument; they are returned as-is (see
//! [`EstimandValues::all_in_unit_interval`]) rather than truncated, so callers
//! and tests can detect violated worlds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to every stored probability.
pub const DEFAULT_EPS_POS: f64 = 1e-6;

/// Raw denominators below this threshold raise [`Error::PositivityViolation`]
/// instead of being silently clamped.
pub const DEFAULT_POSITIVITY_THRESHOLD: f64 = 1e-3;

/// The seven nuisance probabilities at one covariate point.
///
/// Construction clamps every field into `[DEFAULT_EPS_POS, 1 - DEFAULT_EPS_POS]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceAt {
    /// P(A = 1 | x)
    pub pi: f64,
    /// P(M = 1 | A = 0, x)
    pub gamma0: f64,
    /// P(M = 1 | A = 1, x)
    pub gamma1: f64,
    /// P(Y = 1 | A = 0, M = 0, x)
    pub mu00: f64,
    /// P(Y = 1 | A = 0, M = 1, x)
    pub mu01: f64,
    /// P(Y = 1 | A = 1, M = 0, x)
    pub mu10: f64,
    /// P(Y = 1 | A = 1, M = 1, x)
    pub mu11: f64,
}

impl NuisanceAt {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pi: f64,
        gamma0: f64,
        gamma1: f64,
        mu00: f64,
        mu01: f64,
        mu10: f64,
        mu11: f64,
    ) -> Self {
        let c = |p: f64| crate::math::clamp_prob(p, DEFAULT_EPS_POS);
        Self {
            pi: c(pi),
            gamma0: c(gamma0),
            gamma1: c(gamma1),
            mu00: c(mu00),
            mu01: c(mu01),
            mu10: c(mu10),
            mu11: c(mu11),
        }
    }

    /// Joint cell P(A = a, M = m | x), composed from (pi, gamma_a).
    /// The four cells sum to one by construction.
    #[inline]
    pub fn joint_am(&self, a: bool, m: bool) -> f64 {
        let pa = if a { self.pi } else { 1.0 - self.pi };
        let g = if a { self.gamma1 } else { self.gamma0 };
        pa * if m { g } else { 1.0 - g }
    }

    /// Marginal outcome risk P(Y = 1 | A = a, x) = mu_a1 * gamma_a + mu_a0 * (1 - gamma_a).
    #[inline]
    pub fn marginal_mu(&self, a: bool) -> f64 {
        if a {
            self.mu11 * self.gamma1 + self.mu10 * (1.0 - self.gamma1)
        } else {
            self.mu01 * self.gamma0 + self.mu00 * (1.0 - self.gamma0)
        }
    }

    /// P(M = 1 | A = a, x) accessor by arm.
    #[inline]
    pub fn gamma(&self, a: bool) -> f64 {
        if a {
            self.gamma1
        } else {
            self.gamma0
        }
    }

    /// P(Y = 1 | A = a, M = m, x) accessor by cell.
    #[inline]
    pub fn mu(&self, a: bool, m: bool) -> f64 {
        match (a, m) {
            (false, false) => self.mu00,
            (false, true) => self.mu01,
            (true, false) => self.mu10,
            (true, true) => self.mu11,
        }
    }
}

/// Every identified quantity at one covariate point.
///
/// `zeta` is stored as `delta - psi` and `beta_total` as `tau - alpha_total`,
/// so the decomposition identities hold by the arithmetic path itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimandValues {
    /// Probability of causation: P(Y(0) = 0 | Y(1) = 1, x).
    pub tau: f64,
    /// P(M(1) = 1 | Y(1) = 1, x).
    pub xi: f64,
    /// Probability of indirect causation (M(1) = 1 stratum).
    pub psi: f64,
    /// Total mediated probability of causation (M(1) = 1 stratum).
    pub delta: f64,
    /// Probability of direct causation (M(1) = 1 stratum).
    pub zeta: f64,
    /// Total probability of indirect causation (no mediator conditioning).
    pub alpha_total: f64,
    /// Total probability of direct causation (no mediator conditioning).
    pub beta_total: f64,
    /// Total mediated probability of causation on the M(1) = 0 stratum.
    pub delta_prime: f64,
    /// Direct component on the M(1) = 0 stratum (equals `delta_prime`).
    pub zeta_prime: f64,
    /// Indirect component on the M(1) = 0 stratum (identically zero).
    pub psi_prime: f64,
    /// Probability of causation with respect to the mediator; an upper bound
    /// on `psi`.
    pub psi_upper_bound: f64,
}

impl EstimandValues {
    /// True when every component lies in [0, 1]. Monotonicity-violating
    /// nuisances can push identified values outside the unit interval; this
    /// is the flag callers should inspect before interpreting them as
    /// probabilities.
    pub fn all_in_unit_interval(&self) -> bool {
        self.as_pairs()
            .iter()
            .all(|&(_, v)| (0.0..=1.0).contains(&v))
    }

    /// (name, value) pairs in a fixed order, for reports and CSV output.
    pub fn as_pairs(&self) -> [(&'static str, f64); 11] {
        [
            ("tau", self.tau),
            ("xi", self.xi),
            ("psi", self.psi),
            ("delta", self.delta),
            ("zeta", self.zeta),
            ("alpha_total", self.alpha_total),
            ("beta_total", self.beta_total),
            ("delta_prime", self.delta_prime),
            ("zeta_prime", self.zeta_prime),
            ("psi_prime", self.psi_prime),
            ("psi_upper_bound", self.psi_upper_bound),
        ]
    }
}

#[inline]
fn check_positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value < DEFAULT_POSITIVITY_THRESHOLD {
        Err(Error::PositivityViolation {
            quantity,
            value,
            threshold: DEFAULT_POSITIVITY_THRESHOLD,
        })
    } else {
        Ok(value.max(DEFAULT_EPS_POS))
    }
}

/// Probability of causation from the two marginal outcome risks:
/// `1 - mu0 / mu1`.
pub fn pc_outcome(mu0: f64, mu1: f64) -> Result<f64> {
    let mu1 = check_positive("P(Y=1|A=1,x)", mu1)?;
    Ok(1.0 - mu0 / mu1)
}

/// Probability of causation with the mediator in the outcome role:
/// `1 - gamma0 / gamma1`. Also a valid upper bound on the probability of
/// indirect causation.
pub fn pc_mediator(gamma0: f64, gamma1: f64) -> Result<f64> {
    let gamma1 = check_positive("P(M=1|A=1,x)", gamma1)?;
    Ok(1.0 - gamma0 / gamma1)
}

/// Probability of indirect causation:
/// `[1 - mu10/mu11] * [1 - gamma0/gamma1]`.
pub fn identify_psi(nu: &NuisanceAt) -> Result<f64> {
    let mu11 = check_positive("mu11", nu.mu11)?;
    let controlled = 1.0 - nu.mu10 / mu11;
    Ok(controlled * pc_mediator(nu.gamma0, nu.gamma1)?)
}

/// Total mediated probability of causation:
/// `[1 - mu00/mu11][1 - gamma0/gamma1] + [1 - mu01/mu11][gamma0/gamma1]`.
pub fn identify_delta(nu: &NuisanceAt) -> Result<f64> {
    let mu11 = check_positive("mu11", nu.mu11)?;
    let gamma1 = check_positive("gamma1", nu.gamma1)?;
    let w = nu.gamma0 / gamma1;
    Ok((1.0 - nu.mu00 / mu11) * (1.0 - w) + (1.0 - nu.mu01 / mu11) * w)
}

/// Probability of direct causation: `delta - psi`.
pub fn identify_zeta(nu: &NuisanceAt) -> Result<f64> {
    Ok(identify_delta(nu)? - identify_psi(nu)?)
}

/// P(M(1) = 1 | Y(1) = 1, x) by Bayes composition from the base nuisances:
/// `mu11 * gamma1 / (mu11 * gamma1 + mu10 * (1 - gamma1))`.
pub fn identify_xi(nu: &NuisanceAt) -> Result<f64> {
    let mu1 = check_positive("P(Y=1|A=1,x)", nu.marginal_mu(true))?;
    Ok(nu.mu11 * nu.gamma1 / mu1)
}

/// Total probabilities of indirect and direct causation:
/// `alpha = psi * xi`, `beta = tau - alpha`.
pub fn identify_totals(nu: &NuisanceAt) -> Result<(f64, f64)> {
    let alpha = identify_psi(nu)? * identify_xi(nu)?;
    let tau = pc_outcome(nu.marginal_mu(false), nu.marginal_mu(true))?;
    Ok((alpha, tau - alpha))
}

/// Estimands on the M(1) = 0 stratum:
/// `zeta' = 1 - mu00/mu10`, `delta' = zeta'`, `psi' = 0`.
pub fn identify_primes(nu: &NuisanceAt) -> Result<(f64, f64, f64)> {
    let mu10 = check_positive("mu10", nu.mu10)?;
    let zeta_prime = 1.0 - nu.mu00 / mu10;
    Ok((zeta_prime, zeta_prime, 0.0))
}

/// All identified quantities at once. Fails with the offending denominator
/// named if any positivity precondition is violated.
pub fn identify_all(nu: &NuisanceAt) -> Result<EstimandValues> {
    let psi = identify_psi(nu)?;
    let delta = identify_delta(nu)?;
    let zeta = delta - psi;
    let xi = identify_xi(nu)?;
    let (delta_prime, zeta_prime, psi_prime) = identify_primes(nu)?;
    let tau = pc_outcome(nu.marginal_mu(false), nu.marginal_mu(true))?;
    let alpha_total = psi * xi;
    let beta_total = tau - alpha_total;
    let psi_upper_bound = pc_mediator(nu.gamma0, nu.gamma1)?;
    Ok(EstimandValues {
        tau,
        xi,
        psi,
        delta,
        zeta,
        alpha_total,
        beta_total,
        delta_prime,
        zeta_prime,
        psi_prime,
        psi_upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nu(pi: f64, g0: f64, g1: f64, m00: f64, m01: f64, m10: f64, m11: f64) -> NuisanceAt {
        NuisanceAt::new(pi, g0, g1, m00, m01, m10, m11)
    }

    #[test]
    fn pc_outcome_examples() {
        assert!((pc_outcome(0.2, 0.8).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(pc_outcome(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(pc_outcome(0.0, 0.7).unwrap(), 1.0);
        assert!(matches!(
            pc_outcome(0.1, 1e-4),
            Err(Error::PositivityViolation { .. })
        ));
    }

    #[test]
    fn pc_mediator_examples() {
        // Default generating process at x = 0: gamma0 = 0.25, gamma1 = 0.7375.
        assert!((pc_mediator(0.25, 0.7375).unwrap() - 0.661017).abs() < 1e-6);
        assert_eq!(pc_mediator(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(pc_mediator(0.0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn identify_psi_examples() {
        let n = nu(0.5, 0.3, 0.6, 0.4, 0.3, 0.2, 0.8);
        assert!((identify_psi(&n).unwrap() - 0.375).abs() < 1e-15);

        let equal = nu(0.5, 0.3, 0.6, 0.4, 0.3, 0.8, 0.8);
        assert_eq!(identify_psi(&equal).unwrap(), 0.0);

        // Default generating process at x = 0; the frozen value comes from
        // the closed form (1 - 0.8/0.916)(1 - 0.25/0.7375) = 29/229 * 39/59
        // and is cross-checked against the enumeration oracle in the world
        // tests.
        let default_x0 = nu(0.268941421, 0.25, 0.7375, 0.5, 0.3, 0.8, 0.916);
        assert!((identify_psi(&default_x0).unwrap() - 0.083_709_570).abs() < 1e-6);
    }

    #[test]
    fn identify_delta_examples() {
        let n = nu(0.5, 0.3, 0.6, 0.3, 0.2, 0.5, 0.8);
        assert!((identify_delta(&n).unwrap() - 0.6875).abs() < 1e-15);

        let flat = nu(0.5, 0.3, 0.6, 0.8, 0.8, 0.5, 0.8);
        assert!(identify_delta(&flat).unwrap().abs() < 1e-15);

        // gamma0 = gamma1 and mu01 = mu11 kills both terms.
        let degenerate = nu(0.5, 0.6, 0.6, 0.8, 0.8, 0.5, 0.8);
        assert!(identify_delta(&degenerate).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identify_zeta_examples() {
        let n = nu(0.5, 0.3, 0.6, 0.3, 0.2, 0.2, 0.8);
        let psi = identify_psi(&n).unwrap();
        let delta = identify_delta(&n).unwrap();
        assert_eq!(identify_zeta(&n).unwrap(), delta - psi);

        // No mediator effect: zeta collapses to delta.
        let nm = nu(0.5, 0.6, 0.6, 0.3, 0.2, 0.2, 0.8);
        assert_eq!(identify_zeta(&nm).unwrap(), identify_delta(&nm).unwrap());

        let flat = nu(0.5, 0.3, 0.6, 0.5, 0.5, 0.5, 0.5);
        assert!(identify_zeta(&flat).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identify_xi_examples() {
        let n = nu(0.5, 0.3, 0.5, 0.3, 0.2, 0.4, 0.8);
        assert!((identify_xi(&n).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let certain = nu(0.5, 0.3, 1.0, 0.3, 0.2, 0.4, 0.8);
        // gamma1 clamps to 1 - eps; xi is 1 up to the clamp.
        assert!((identify_xi(&certain).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn identify_totals_examples() {
        // psi = 0 => alpha = 0 and beta = tau.
        let nopsi = nu(0.5, 0.3, 0.6, 0.4, 0.3, 0.8, 0.8);
        let (alpha, beta) = identify_totals(&nopsi).unwrap();
        assert_eq!(alpha, 0.0);
        let tau = pc_outcome(nopsi.marginal_mu(false), nopsi.marginal_mu(true)).unwrap();
        assert_eq!(beta, tau);

        // alpha + beta = tau by the arithmetic path.
        let n = nu(0.4, 0.2, 0.7, 0.3, 0.25, 0.5, 0.8);
        let (a, b) = identify_totals(&n).unwrap();
        let tau = pc_outcome(n.marginal_mu(false), n.marginal_mu(true)).unwrap();
        assert!((a + b - tau).abs() < 1e-15);

        // xi near one collapses alpha to psi.
        let certain = nu(0.5, 0.2, 1.0, 0.3, 0.25, 0.5, 0.8);
        let (a, _) = identify_totals(&certain).unwrap();
        assert!((a - identify_psi(&certain).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn identify_primes_examples() {
        let n = nu(0.5, 0.3, 0.6, 0.25, 0.2, 0.5, 0.8);
        let (d, z, p) = identify_primes(&n).unwrap();
        assert_eq!((d, z, p), (0.5, 0.5, 0.0));

        let eq = nu(0.5, 0.3, 0.6, 0.5, 0.2, 0.5, 0.8);
        assert_eq!(identify_primes(&eq).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identify_all_satisfies_identities() {
        let n = nu(0.268941421, 0.25, 0.7375, 0.5, 0.3, 0.8, 0.916);
        let v = identify_all(&n).unwrap();
        assert_eq!(v.delta - v.psi, v.zeta);
        assert!((v.tau - (v.delta * v.xi + v.delta_prime * (1.0 - v.xi))).abs() < 1e-12);
        assert!((v.alpha_total + v.beta_total - v.tau).abs() < 1e-12);
        assert_eq!(v.psi_prime, 0.0);
        assert_eq!(v.delta_prime, v.zeta_prime);
        assert!(v.psi <= v.psi_upper_bound);
        assert!(v.all_in_unit_interval());
    }

    #[test]
    fn boundary_input_is_finite_or_errors() {
        // mu11 at the clamp floor: below the reporting threshold, so an error.
        let n = nu(0.5, 0.3, 0.6, 0.3, 0.2, 0.5, DEFAULT_EPS_POS);
        match identify_all(&n) {
            Err(Error::PositivityViolation { quantity, .. }) => assert_eq!(quantity, "mu11"),
            Ok(v) => {
                for (_, val) in v.as_pairs() {
                    assert!(val.is_finite());
                }
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn violated_monotonicity_is_returned_not_clamped() {
        // mu10 > mu11 makes psi negative; the raw value must survive.
        let n = nu(0.5, 0.3, 0.6, 0.3, 0.2, 0.9, 0.8);
        let v = identify_all(&n).unwrap();
        assert!(v.psi < 0.0);
        assert!(!v.all_in_unit_interval());
    }
}
