//! Uncentered efficient-influence-function pseudo-outcomes.
//!
//! For each observed record and nuisance evaluation, these return a value
//! whose conditional expectation given `X` equals the target estimand when
//! the nuisances are correct, and whose bias under nuisance error is a
//! product of component errors (second order). Regressing these
//! pseudo-outcomes on a working model yields the doubly-robust projection
//! estimator.
//!
//! The indirect-probability pseudo-outcome is
//!
//! ```text
//! phi = phi3 - phi1 - phi2 + psi(x)
//! ```
//!
//! where `phi1`/`phi2` are the influence terms of the risk ratios
//! `mu10/mu11` and `gamma0/gamma1`, and `phi3` the product-rule combination.
//! The total-probability pseudo-outcome follows the same pattern over the
//! component ratios of `delta`. Its fifth term combines the influence terms
//! of `mu01/mu11` and `gamma0/gamma1` by the product rule:
//!
//! ```text
//! phi_tpc5 = phi_tpc2 * (gamma0/gamma1) + phi_tpc3 * (mu01/mu11)
//! ```
//!
//! [`Phi5Variant::AsDisplayed`] keeps an alternative form in which the first
//! factor repeats `phi_tpc3`; it breaks the product-rule structure (its bias
//! under gamma error is first-order rather than second-order) and exists so
//! tests can demonstrate exactly that. `Corrected` is the default everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimand::{self, NuisanceAt, DEFAULT_POSITIVITY_THRESHOLD};
use crate::world::ObservedRecord;

/// Which estimand a pseudo-outcome tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Psi,
    Delta,
    Zeta,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Psi, Target::Delta, Target::Zeta];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Psi => "psi",
            Target::Delta => "delta",
            Target::Zeta => "zeta",
        }
    }

    /// Table-style label: psi is the indirect path, zeta the direct path,
    /// delta their total.
    pub fn label(&self) -> &'static str {
        match self {
            Target::Psi => "indirect",
            Target::Delta => "total",
            Target::Zeta => "direct",
        }
    }

    /// The estimand value this target tracks.
    pub fn value_of(&self, v: &crate::estimand::EstimandValues) -> f64 {
        match self {
            Target::Psi => v.psi,
            Target::Delta => v.delta,
            Target::Zeta => v.zeta,
        }
    }
}

/// Form of the fifth component of the total-probability pseudo-outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi5Variant {
    #[default]
    Corrected,
    AsDisplayed,
}

/// One pseudo-outcome with its intermediate components for diagnostics.
///
/// For `Psi` the components are `[phi1, phi2, phi3, 0, 0]`; for `Delta`,
/// `[phi_tpc1..phi_tpc5]`; for `Zeta`, `[phi_delta, phi_psi, 0, 0, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoOutcome {
    pub value: f64,
    pub target: Target,
    pub components: [f64; 5],
}

#[inline]
fn check_cell(name: &'static str, p: f64) -> Result<f64> {
    // The slack keeps probabilities sitting exactly at the model clamp floor
    // (e.g. 1 - (1 - 1e-3), which rounds a hair under 1e-3) on the valid side.
    if p < DEFAULT_POSITIVITY_THRESHOLD * (1.0 - 1e-9) {
        Err(Error::PositivityViolation {
            quantity: name,
            value: p,
            threshold: DEFAULT_POSITIVITY_THRESHOLD,
        })
    } else {
        Ok(p)
    }
}

#[inline]
fn indicators(o: &ObservedRecord) -> (f64, f64, f64) {
    (
        f64::from(u8::from(o.a)),
        f64::from(u8::from(o.m)),
        f64::from(u8::from(o.y)),
    )
}

/// Influence term of the ratio `gamma0/gamma1` (shared by both targets).
#[inline]
fn phi_gamma_ratio(o: &ObservedRecord, nu: &NuisanceAt) -> Result<f64> {
    let (a, m, _) = indicators(o);
    let pa1 = check_cell("P(A=1|x)", nu.pi)?;
    let pa0 = check_cell("P(A=0|x)", 1.0 - nu.pi)?;
    Ok((1.0 / nu.gamma1)
        * ((1.0 - a) * (m - nu.gamma0) / pa0 - (nu.gamma0 / nu.gamma1) * a * (m - nu.gamma1) / pa1))
}

/// Influence term of the ratio `mu_am/mu11` for the off-diagonal cell (a, m).
#[inline]
fn phi_mu_ratio(o: &ObservedRecord, nu: &NuisanceAt, cell_a: bool, cell_m: bool) -> Result<f64> {
    let (a, m, y) = indicators(o);
    let p_cell = check_cell(
        match (cell_a, cell_m) {
            (true, false) => "P(A=1,M=0|x)",
            (false, false) => "P(A=0,M=0|x)",
            (false, true) => "P(A=0,M=1|x)",
            (true, true) => "P(A=1,M=1|x)",
        },
        nu.joint_am(cell_a, cell_m),
    )?;
    let p11 = check_cell("P(A=1,M=1|x)", nu.joint_am(true, true))?;
    let mu_cell = nu.mu(cell_a, cell_m);
    let ind_cell = (if cell_a { a } else { 1.0 - a }) * (if cell_m { m } else { 1.0 - m });
    Ok((1.0 / nu.mu11)
        * (ind_cell * (y - mu_cell) / p_cell - (mu_cell / nu.mu11) * a * m * (y - nu.mu11) / p11))
}

/// Pseudo-outcome for the probability of indirect causation.
pub fn phi_psi(o: &ObservedRecord, nu: &NuisanceAt) -> Result<PseudoOutcome> {
    let phi1 = phi_mu_ratio(o, nu, true, false)?;
    let phi2 = phi_gamma_ratio(o, nu)?;
    let phi3 = phi1 * (nu.gamma0 / nu.gamma1) + phi2 * (nu.mu10 / nu.mu11);
    let psi = estimand::identify_psi(nu)?;
    Ok(PseudoOutcome {
        value: phi3 - phi1 - phi2 + psi,
        target: Target::Psi,
        components: [phi1, phi2, phi3, 0.0, 0.0],
    })
}

/// Pseudo-outcome for the total mediated probability of causation.
pub fn phi_delta(o: &ObservedRecord, nu: &NuisanceAt) -> Result<PseudoOutcome> {
    phi_delta_variant(o, nu, Phi5Variant::Corrected)
}

/// As [`phi_delta`], with an explicit choice of the fifth component's form.
pub fn phi_delta_variant(
    o: &ObservedRecord,
    nu: &NuisanceAt,
    variant: Phi5Variant,
) -> Result<PseudoOutcome> {
    let t1 = phi_mu_ratio(o, nu, false, false)?;
    let t2 = phi_mu_ratio(o, nu, false, true)?;
    let t3 = phi_gamma_ratio(o, nu)?;
    let g_ratio = nu.gamma0 / nu.gamma1;
    let t4 = t1 * g_ratio + t3 * (nu.mu00 / nu.mu11);
    let t5 = match variant {
        Phi5Variant::Corrected => t2 * g_ratio + t3 * (nu.mu01 / nu.mu11),
        Phi5Variant::AsDisplayed => t3 * g_ratio + t3 * (nu.mu01 / nu.mu11),
    };
    let delta = estimand::identify_delta(nu)?;
    Ok(PseudoOutcome {
        value: t4 - t5 - t1 + delta,
        target: Target::Delta,
        components: [t1, t2, t3, t4, t5],
    })
}

/// Pseudo-outcome for the probability of direct causation: the difference of
/// the total and indirect pseudo-outcomes, record by record.
pub fn phi_zeta(o: &ObservedRecord, nu: &NuisanceAt) -> Result<PseudoOutcome> {
    let d = phi_delta(o, nu)?;
    let p = phi_psi(o, nu)?;
    Ok(PseudoOutcome {
        value: d.value - p.value,
        target: Target::Zeta,
        components: [d.value, p.value, 0.0, 0.0, 0.0],
    })
}

/// Pseudo-outcome value for any target.
pub fn phi_value(target: Target, o: &ObservedRecord, nu: &NuisanceAt) -> Result<f64> {
    match target {
        Target::Psi => Ok(phi_psi(o, nu)?.value),
        Target::Delta => Ok(phi_delta(o, nu)?.value),
        Target::Zeta => Ok(phi_zeta(o, nu)?.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(a: bool, m: bool, y: bool) -> ObservedRecord {
        ObservedRecord { x: 0.5, a, m, y }
    }

    #[test]
    fn phi1_matches_hand_computation() {
        // pi = 0.5, gamma1 = 0.5 puts P(A=1,M=0|x) at 0.25.
        let nu = NuisanceAt::new(0.5, 0.4, 0.5, 0.3, 0.2, 0.5, 0.8);
        let out = phi_psi(&record(true, false, true), &nu).unwrap();
        assert!((out.components[0] - 2.5).abs() < 1e-12);
        // Second term of phi1 is inactive because A*M = 0.
    }

    #[test]
    fn phi2_matches_hand_computation() {
        let nu = NuisanceAt::new(0.5, 0.4, 0.8, 0.3, 0.2, 0.5, 0.8);
        let out = phi_psi(&record(false, true, false), &nu).unwrap();
        assert!((out.components[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn phi_tpc1_reduces_to_second_term_for_exposed_mediated_records() {
        let nu = NuisanceAt::new(0.5, 0.4, 0.5, 0.3, 0.2, 0.5, 0.8);
        let o = record(true, true, true);
        let out = phi_delta(&o, &nu).unwrap();
        let p11 = nu.joint_am(true, true);
        let expected = -(1.0 / nu.mu11) * (nu.mu00 / nu.mu11) * (1.0 - nu.mu11) / p11;
        assert!((out.components[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn zeta_is_exactly_the_difference() {
        let nu = NuisanceAt::new(0.4, 0.3, 0.6, 0.35, 0.25, 0.5, 0.8);
        for &(a, m, y) in &[
            (false, false, false),
            (false, true, true),
            (true, false, true),
            (true, true, false),
        ] {
            let o = record(a, m, y);
            let z = phi_zeta(&o, &nu).unwrap();
            let d = phi_delta(&o, &nu).unwrap();
            let p = phi_psi(&o, &nu).unwrap();
            assert_eq!(z.value, d.value - p.value);
        }
    }

    #[test]
    fn variants_differ_only_in_the_fifth_component() {
        let nu = NuisanceAt::new(0.4, 0.3, 0.6, 0.35, 0.25, 0.5, 0.8);
        let o = record(false, true, true);
        let c = phi_delta_variant(&o, &nu, Phi5Variant::Corrected).unwrap();
        let d = phi_delta_variant(&o, &nu, Phi5Variant::AsDisplayed).unwrap();
        assert_eq!(c.components[..4], d.components[..4]);
        assert_ne!(c.components[4], d.components[4]);
    }

    #[test]
    fn positivity_violations_name_the_cell() {
        // pi extreme: P(A=0|x) below threshold.
        let nu = NuisanceAt::new(1.0 - 1e-7, 0.3, 0.6, 0.35, 0.25, 0.5, 0.8);
        match phi_psi(&record(true, true, true), &nu) {
            Err(Error::PositivityViolation { quantity, .. }) => {
                assert!(quantity.contains("A=0"), "got {quantity}");
            }
            other => panic!("expected positivity violation, got {other:?}"),
        }
    }

    /// E[phi | A, M composition] check on a tiny exact distribution: averaging
    /// the pseudo-outcome over the full observed-data law at fixed nuisances
    /// recovers the identified estimand exactly.
    #[test]
    fn exact_average_over_observed_law_recovers_estimand() {
        let nu = NuisanceAt::new(0.35, 0.28, 0.64, 0.4, 0.3, 0.55, 0.82);
        for target in [Target::Psi, Target::Delta, Target::Zeta] {
            let mut mean = 0.0;
            for a in [false, true] {
                for m in [false, true] {
                    let p_am = nu.joint_am(a, m);
                    let p_y = nu.mu(a, m);
                    for y in [false, true] {
                        let p = p_am * if y { p_y } else { 1.0 - p_y };
                        let o = record(a, m, y);
                        mean += p * phi_value(target, &o, &nu).unwrap();
                    }
                }
            }
            let v = crate::estimand::identify_all(&nu).unwrap();
            let want = target.value_of(&v);
            assert!(
                (mean - want).abs() < 1e-12,
                "{}: {mean} vs {want}",
                target.name()
            );
        }
    }
}
