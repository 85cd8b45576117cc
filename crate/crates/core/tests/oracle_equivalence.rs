//! Identification formulas against the exact counterfactual enumeration.
//!
//! The oracle computes every estimand from its defining conditional
//! probability over the 64 latent states; the identification formulas only
//! see the implied observed-data nuisances. Agreement on a grid is the
//! strongest artifact-level check of the identification argument, and the
//! uncoupled-world divergence shows the agreement is not vacuous.

use mpoc::estimand::{identify_all, identify_totals, identify_xi, pc_outcome};
use mpoc::world::{oracle_estimands, sample_records, sample_worlds_at, true_nuisance, DgpSpec};

fn grid21() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[test]
fn identified_estimands_match_the_enumeration_on_the_grid() {
    let spec = DgpSpec::default();
    for x in grid21() {
        let nu = true_nuisance(&spec, x).unwrap();
        let ident = identify_all(&nu).unwrap();
        let oracle = oracle_estimands(&spec, x).unwrap();
        for ((name, a), (_, b)) in ident.as_pairs().iter().zip(oracle.as_pairs().iter()) {
            assert!(
                (a - b).abs() < 1e-12,
                "{name} at x = {x}: identified {a} vs oracle {b}"
            );
        }
    }
}

#[test]
fn xi_composition_matches_oracle_at_midpoint() {
    let spec = DgpSpec::default();
    let nu = true_nuisance(&spec, 0.5).unwrap();
    let oracle = oracle_estimands(&spec, 0.5).unwrap();
    assert!((identify_xi(&nu).unwrap() - oracle.xi).abs() < 1e-12);
}

#[test]
fn totals_match_oracle_and_recompose_tau() {
    let spec = DgpSpec::default();
    let nu = true_nuisance(&spec, 0.25).unwrap();
    let (alpha, beta) = identify_totals(&nu).unwrap();
    let tau = pc_outcome(nu.marginal_mu(false), nu.marginal_mu(true)).unwrap();
    assert!((alpha + beta - tau).abs() < 1e-12);
    let oracle = oracle_estimands(&spec, 0.25).unwrap();
    assert!((alpha - oracle.alpha_total).abs() < 1e-12);
    assert!((beta - oracle.beta_total).abs() < 1e-12);
}

#[test]
fn frozen_psi_value_at_zero() {
    // (1 - 0.8/0.916)(1 - 0.25/0.7375) = (29/229)(39/59); frozen from the
    // enumeration oracle.
    let spec = DgpSpec::default();
    let oracle = oracle_estimands(&spec, 0.0).unwrap();
    assert!(
        (oracle.psi - 0.083_709_569_8).abs() < 1e-9,
        "psi = {}",
        oracle.psi
    );
    let nu = true_nuisance(&spec, 0.0).unwrap();
    let ident = identify_all(&nu).unwrap();
    assert!((ident.psi - oracle.psi).abs() < 1e-12);
}

#[test]
fn uncoupled_world_diverges_from_the_identification_formulas() {
    let spec = DgpSpec {
        enforce_monotonicity: false,
        ..DgpSpec::default()
    };
    let mut max_diff: f64 = 0.0;
    for x in grid21() {
        let nu = true_nuisance(&spec, x).unwrap();
        let ident = identify_all(&nu).unwrap();
        let oracle = oracle_estimands(&spec, x).unwrap();
        for ((_, a), (_, b)) in ident.as_pairs().iter().zip(oracle.as_pairs().iter()) {
            max_diff = max_diff.max((a - b).abs());
        }
    }
    assert!(
        max_diff > 0.01,
        "independent potential values should break identification; max diff {max_diff}"
    );
}

#[test]
fn sampled_world_frequencies_match_true_nuisance() {
    let spec = DgpSpec::default();
    let n = 1_000_000usize;
    for &x in &[0.15, 0.6, 0.9] {
        let worlds = sample_worlds_at(&spec, x, n, 314).unwrap();
        let nu = true_nuisance(&spec, x).unwrap();
        let freq = |count: usize| count as f64 / n as f64;
        let se = |p: f64| 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        let checks = [
            (freq(worlds.iter().filter(|w| w.a).count()), nu.pi, "pi"),
            (
                freq(worlds.iter().filter(|w| w.m0).count()),
                nu.gamma0,
                "gamma0",
            ),
            (
                freq(worlds.iter().filter(|w| w.m1).count()),
                nu.gamma1,
                "gamma1",
            ),
            (
                freq(worlds.iter().filter(|w| w.y00).count()),
                nu.mu00,
                "mu00",
            ),
            (
                freq(worlds.iter().filter(|w| w.y01).count()),
                nu.mu01,
                "mu01",
            ),
            (
                freq(worlds.iter().filter(|w| w.y10).count()),
                nu.mu10,
                "mu10",
            ),
            (
                freq(worlds.iter().filter(|w| w.y11).count()),
                nu.mu11,
                "mu11",
            ),
        ];
        for (observed, expected, name) in checks {
            assert!(
                (observed - expected).abs() < se(expected),
                "{name} at x = {x}: {observed} vs {expected}"
            );
        }
    }
}

#[test]
fn observed_mediator_rates_match_gamma1_in_covariate_bins() {
    let spec = DgpSpec::default();
    let n = 1_000_000usize;
    let records = sample_records(&spec, n, 2718);
    let bins = 20usize;
    let mut hits = vec![0usize; bins];
    let mut totals = vec![0usize; bins];
    for r in &records {
        if r.a {
            let b = ((r.x * bins as f64) as usize).min(bins - 1);
            totals[b] += 1;
            if r.m {
                hits[b] += 1;
            }
        }
    }
    for b in 0..bins {
        let center = (b as f64 + 0.5) / bins as f64;
        let expected = true_nuisance(&spec, center).unwrap().gamma1;
        let observed = hits[b] as f64 / totals[b] as f64;
        let se = (expected * (1.0 - expected) / totals[b] as f64).sqrt();
        assert!(
            (observed - expected).abs() < 4.0 * se,
            "bin {b}: {observed} vs {expected} (se {se})"
        );
    }
}
