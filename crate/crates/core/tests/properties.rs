//! Property tests over random nuisance tuples and records.

use proptest::prelude::*;

use mpoc::eif::{phi_delta, phi_psi, phi_zeta};
use mpoc::estimand::{identify_all, pc_mediator, NuisanceAt};
use mpoc::world::ObservedRecord;

fn prob() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

fn any_nuisance() -> impl Strategy<Value = NuisanceAt> {
    (prob(), prob(), prob(), prob(), prob(), prob(), prob()).prop_map(
        |(pi, g0, g1, m00, m01, m10, m11)| NuisanceAt::new(pi, g0, g1, m00, m01, m10, m11),
    )
}

/// Nuisances consistent with the monotone world: gamma0 <= gamma1 and
/// mu00 <= mu10 <= mu11, mu01 <= mu11.
fn monotone_nuisance() -> impl Strategy<Value = NuisanceAt> {
    (prob(), prob(), prob(), prob(), prob(), prob(), prob()).prop_map(|(pi, a, b, c, d, e, f)| {
        let (g0, g1) = if a <= b { (a, b) } else { (b, a) };
        let mut mus = [c, d, e];
        mus.sort_by(f64::total_cmp);
        let [m00, m10, m11] = mus;
        let m01 = f * m11;
        NuisanceAt::new(pi, g0, g1, m00, m01, m10, m11)
    })
}

proptest! {
    #[test]
    fn decomposition_identities_hold(nu in any_nuisance()) {
        let v = identify_all(&nu).unwrap();
        // Differences by the same arithmetic path are exact.
        prop_assert_eq!(v.delta - v.psi, v.zeta);
        prop_assert_eq!(v.psi_prime, 0.0);
        prop_assert_eq!(v.delta_prime, v.zeta_prime);
        prop_assert!((v.tau - (v.delta * v.xi + v.delta_prime * (1.0 - v.xi))).abs() < 1e-12);
        prop_assert!((v.alpha_total + v.beta_total - v.tau).abs() < 1e-12);
        for (name, val) in v.as_pairs() {
            prop_assert!(val.is_finite(), "{} not finite", name);
        }
    }

    #[test]
    fn joint_cells_are_positive_and_sum_to_one(nu in any_nuisance()) {
        let mut total = 0.0;
        for a in [false, true] {
            for m in [false, true] {
                let p = nu.joint_am(a, m);
                prop_assert!(p > 0.0);
                total += p;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indirect_probability_respects_its_upper_bound(nu in monotone_nuisance()) {
        let v = identify_all(&nu).unwrap();
        let bound = pc_mediator(nu.gamma0, nu.gamma1).unwrap();
        prop_assert!(v.psi <= bound + 1e-15, "psi {} above bound {}", v.psi, bound);
        prop_assert_eq!(v.psi_upper_bound, bound);
    }

    #[test]
    fn pseudo_outcomes_are_additive_and_finite(
        nu in any_nuisance(),
        x in 0.0f64..1.0,
        a in any::<bool>(),
        m in any::<bool>(),
        y in any::<bool>(),
    ) {
        let o = ObservedRecord { x, a, m, y };
        // Random tuples can produce near-degenerate joint cells; skip those.
        let (d, p, z) = match (phi_delta(&o, &nu), phi_psi(&o, &nu), phi_zeta(&o, &nu)) {
            (Ok(d), Ok(p), Ok(z)) => (d, p, z),
            _ => return Ok(()),
        };
        prop_assert_eq!(z.value, d.value - p.value);
        prop_assert!(d.value.is_finite() && p.value.is_finite());
    }
}
