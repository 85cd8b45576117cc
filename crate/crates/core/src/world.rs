//! Synthetic data-generating process over full counterfactual tables.
//!
//! Each unit carries a covariate `x`, an exposure `a`, both potential
//! mediators `M(0), M(1)`, and all four potential outcomes `Y(a, m)`. The
//! default construction couples the latent draws so that the monotonicity
//! assumptions hold by construction:
//!
//! ```text
//! M(0)    ~ Bern(gamma0(x))
//! M(1)    = 1 if M(0) = 1, else Bern(gamma1_tilde(x))
//! Y(0,0)  ~ Bern(mu00(x))
//! Y(0,1)  ~ Bern(mu01(x))
//! Y(1,0)  = 1 if Y(0,0) = 1, else Bern(mu10_tilde(x))
//! Y(1,1)  = 1 if Y(0,1) = 1 or Y(1,0) = 1, else Bern(mu11_tilde(x))
//! ```
//!
//! Setting `enforce_monotonicity = false` instead draws all six potential
//! values independently from the implied marginals, which leaves every
//! observed-data distribution unchanged while breaking the cross-world
//! coupling — the configuration used to demonstrate that the identification
//! formulas are not assumption-free.
//!
//! [`oracle_estimands`] enumerates the 64 joint states of the six latent
//! draws and evaluates every estimand exactly from its counterfactual
//! definition, with no reference to the identification formulas.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimand::{EstimandValues, NuisanceAt};
use crate::math::{self, expit, stream};

/// One scalar-to-probability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CurveSpec {
    /// `c0 + c1 x + c2 x^2` on the probability scale.
    Poly { c0: f64, c1: f64, c2: f64 },
    /// `expit(c0 + c1 x)`.
    LogitLinear { c0: f64, c1: f64 },
}

impl CurveSpec {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            CurveSpec::Poly { c0, c1, c2 } => c0 + c1 * x + c2 * x * x,
            CurveSpec::LogitLinear { c0, c1 } => expit(c0 + c1 * x),
        }
    }

    /// Range of the curve over [0, 1] (endpoints plus interior extremum).
    fn range_on_unit(&self) -> (f64, f64) {
        match *self {
            CurveSpec::Poly { c0, c1, c2 } => {
                let mut lo = f64::min(self.eval(0.0), self.eval(1.0));
                let mut hi = f64::max(self.eval(0.0), self.eval(1.0));
                if c2 != 0.0 {
                    let v = -c1 / (2.0 * c2);
                    if (0.0..=1.0).contains(&v) {
                        let p = c0 + c1 * v + c2 * v * v;
                        lo = lo.min(p);
                        hi = hi.max(p);
                    }
                }
                (lo, hi)
            }
            CurveSpec::LogitLinear { .. } => {
                let a = self.eval(0.0);
                let b = self.eval(1.0);
                (a.min(b), a.max(b))
            }
        }
    }
}

/// Full specification of the data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpSpec {
    /// Propensity P(A = 1 | x).
    pub pi: CurveSpec,
    /// P(M(0) = 1 | x).
    pub gamma0: CurveSpec,
    /// Conditional draw probability for M(1) given M(0) = 0.
    pub gamma1_tilde: CurveSpec,
    /// P(Y(0,0) = 1 | x).
    pub mu00: CurveSpec,
    /// P(Y(0,1) = 1 | x); read as a conditional draw given Y(0,0) = 0 when
    /// `y01_coupling` is set.
    pub mu01: CurveSpec,
    /// Conditional draw probability for Y(1,0) given Y(0,0) = 0.
    pub mu10_tilde: CurveSpec,
    /// Conditional draw probability for Y(1,1) given Y(0,1) = Y(1,0) = 0.
    pub mu11_tilde: CurveSpec,
    /// Monotone coupling of the latent draws (default). When false, all six
    /// potential values are drawn independently from the implied marginals.
    pub enforce_monotonicity: bool,
    /// Optional extra coupling Y(0,1) >= Y(0,0), off by default.
    pub y01_coupling: bool,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            pi: CurveSpec::LogitLinear { c0: -1.0, c1: -0.5 },
            gamma0: CurveSpec::Poly {
                c0: 0.25,
                c1: -0.1,
                c2: -0.1,
            },
            gamma1_tilde: CurveSpec::Poly {
                c0: 0.65,
                c1: -0.1,
                c2: -0.2,
            },
            mu00: CurveSpec::Poly {
                c0: 0.5,
                c1: -0.1,
                c2: -0.2,
            },
            mu01: CurveSpec::Poly {
                c0: 0.3,
                c1: -0.1,
                c2: -0.1,
            },
            mu10_tilde: CurveSpec::Poly {
                c0: 0.6,
                c1: -0.1,
                c2: -0.1,
            },
            mu11_tilde: CurveSpec::Poly {
                c0: 0.4,
                c1: -0.1,
                c2: -0.2,
            },
            enforce_monotonicity: true,
            y01_coupling: false,
        }
    }
}

impl DgpSpec {
    /// Check that all seven curves map [0, 1] into (0, 1).
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("pi", &self.pi),
            ("gamma0", &self.gamma0),
            ("gamma1_tilde", &self.gamma1_tilde),
            ("mu00", &self.mu00),
            ("mu01", &self.mu01),
            ("mu10_tilde", &self.mu10_tilde),
            ("mu11_tilde", &self.mu11_tilde),
        ];
        for (name, curve) in named {
            let (lo, hi) = curve.range_on_unit();
            if lo <= 0.0 || hi >= 1.0 {
                return Err(Error::InvalidSpec {
                    reason: format!("{name} leaves (0,1) on [0,1]: range [{lo}, {hi}]"),
                });
            }
        }
        Ok(())
    }

    /// The six latent Bernoulli probabilities at `x`, in draw order
    /// (M(0), M(1)-draw, Y(0,0), Y(0,1), Y(1,0)-draw, Y(1,1)-draw).
    fn latents_at(&self, x: f64) -> [f64; 6] {
        if self.enforce_monotonicity {
            [
                self.gamma0.eval(x),
                self.gamma1_tilde.eval(x),
                self.mu00.eval(x),
                self.mu01.eval(x),
                self.mu10_tilde.eval(x),
                self.mu11_tilde.eval(x),
            ]
        } else {
            // Independent draws from the implied marginals.
            let nu = implied_nuisance(self, x);
            [nu.gamma0, nu.gamma1, nu.mu00, nu.mu01, nu.mu10, nu.mu11]
        }
    }

    /// Apply the coupling rules to one latent bit pattern.
    #[inline]
    fn couple(&self, x: f64, a: bool, bits: [bool; 6]) -> PotentialWorld {
        let [lm0, lg1, ly00, ly01, ly10, ly11] = bits;
        if self.enforce_monotonicity {
            let m0 = lm0;
            let m1 = m0 || lg1;
            let y00 = ly00;
            let y01 = if self.y01_coupling { y00 || ly01 } else { ly01 };
            let y10 = y00 || ly10;
            let y11 = y01 || y10 || ly11;
            PotentialWorld {
                x,
                a,
                m0,
                m1,
                y00,
                y01,
                y10,
                y11,
            }
        } else {
            PotentialWorld {
                x,
                a,
                m0: lm0,
                m1: lg1,
                y00: ly00,
                y01: ly01,
                y10: ly10,
                y11: ly11,
            }
        }
    }
}

/// Implied marginal nuisances without the domain check; shared by
/// [`true_nuisance`] and the independent-draw mode.
fn implied_nuisance(spec: &DgpSpec, x: f64) -> NuisanceAt {
    let pi = spec.pi.eval(x);
    let g0 = spec.gamma0.eval(x);
    let g1t = spec.gamma1_tilde.eval(x);
    let g1 = g1t * (1.0 - g0) + g0;
    let m00 = spec.mu00.eval(x);
    let m10t = spec.mu10_tilde.eval(x);
    let m10 = m10t * (1.0 - m00) + m00;
    let (m01, survive) = if spec.y01_coupling {
        let m01t = spec.mu01.eval(x);
        let m01 = m01t * (1.0 - m00) + m00;
        // P(Y(0,1) = 0, Y(1,0) = 0) under the shared Y(0,0) latent.
        (m01, (1.0 - m00) * (1.0 - m01t) * (1.0 - m10t))
    } else {
        let m01 = spec.mu01.eval(x);
        (m01, (1.0 - m01) * (1.0 - m10t) * (1.0 - m00))
    };
    let m11t = spec.mu11_tilde.eval(x);
    let m11 = m11t * survive + (1.0 - survive);
    NuisanceAt::new(pi, g0, g1, m00, m01, m10, m11)
}

/// The observed-data nuisance values implied by the generating process at `x`.
pub fn true_nuisance(spec: &DgpSpec, x: f64) -> Result<NuisanceAt> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError { x });
    }
    Ok(implied_nuisance(spec, x))
}

/// One unit's complete counterfactual table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialWorld {
    pub x: f64,
    pub a: bool,
    /// M(0), M(1)
    pub m0: bool,
    pub m1: bool,
    /// Y(a, m)
    pub y00: bool,
    pub y01: bool,
    pub y10: bool,
    pub y11: bool,
}

impl PotentialWorld {
    /// M(a).
    #[inline]
    pub fn mediator(&self, a: bool) -> bool {
        if a {
            self.m1
        } else {
            self.m0
        }
    }

    /// Y(a, m).
    #[inline]
    pub fn outcome(&self, a: bool, m: bool) -> bool {
        match (a, m) {
            (false, false) => self.y00,
            (false, true) => self.y01,
            (true, false) => self.y10,
            (true, true) => self.y11,
        }
    }

    /// Y(a) = Y(a, M(a)).
    #[inline]
    pub fn natural_outcome(&self, a: bool) -> bool {
        self.outcome(a, self.mediator(a))
    }

    /// The cross-world value Y(1, M(0)).
    #[inline]
    pub fn outcome_exposed_baseline_mediator(&self) -> bool {
        self.outcome(true, self.m0)
    }

    /// All four monotonicity inequalities.
    pub fn satisfies_monotone_coupling(&self) -> bool {
        self.m1 >= self.m0 && self.y10 >= self.y00 && self.y11 >= self.y10 && self.y11 >= self.y01
    }
}

/// One unit as observed: covariate, exposure, mediator, outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedRecord {
    pub x: f64,
    pub a: bool,
    pub m: bool,
    pub y: bool,
}

/// Consistency: the observed row picks the potential values selected by `a`.
#[inline]
pub fn observe(world: &PotentialWorld) -> ObservedRecord {
    let m = world.mediator(world.a);
    ObservedRecord {
        x: world.x,
        a: world.a,
        m,
        y: world.outcome(world.a, m),
    }
}

#[inline]
fn draw_world(spec: &DgpSpec, rng: &mut ChaCha8Rng) -> PotentialWorld {
    let x: f64 = rng.gen();
    draw_world_at(spec, x, rng)
}

#[inline]
fn draw_world_at(spec: &DgpSpec, x: f64, rng: &mut ChaCha8Rng) -> PotentialWorld {
    let pi = spec.pi.eval(x);
    let a = rng.gen::<f64>() < pi;
    let probs = spec.latents_at(x);
    let mut bits = [false; 6];
    for (bit, p) in bits.iter_mut().zip(probs) {
        *bit = rng.gen::<f64>() < p;
    }
    spec.couple(x, a, bits)
}

/// Draw `n` full counterfactual tables. Unit `i`'s draws come from the
/// generator derived from `(seed, i)`, so output is independent of thread
/// count and identical across runs.
pub fn sample_worlds(spec: &DgpSpec, n: usize, seed: u64) -> Vec<PotentialWorld> {
    let mut out = Vec::with_capacity(n);
    math::par_chunked(
        n,
        |range| {
            range
                .map(|i| draw_world(spec, &mut math::unit_rng(seed, stream::WORLD, i as u64)))
                .collect::<Vec<_>>()
        },
        |chunk: Vec<PotentialWorld>| out.extend(chunk),
    );
    out
}

/// Draw `n` worlds at a fixed covariate value (diagnostics and tests).
pub fn sample_worlds_at(
    spec: &DgpSpec,
    x: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<PotentialWorld>> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError { x });
    }
    let mut out = Vec::with_capacity(n);
    math::par_chunked(
        n,
        |range| {
            range
                .map(|i| draw_world_at(spec, x, &mut math::unit_rng(seed, stream::WORLD, i as u64)))
                .collect::<Vec<_>>()
        },
        |chunk: Vec<PotentialWorld>| out.extend(chunk),
    );
    Ok(out)
}

/// Draw `n` observed records (worlds mapped through consistency on the fly).
pub fn sample_records(spec: &DgpSpec, n: usize, seed: u64) -> Vec<ObservedRecord> {
    let mut out = Vec::with_capacity(n);
    math::par_chunked(
        n,
        |range| {
            range
                .map(|i| {
                    observe(&draw_world(
                        spec,
                        &mut math::unit_rng(seed, stream::WORLD, i as u64),
                    ))
                })
                .collect::<Vec<_>>()
        },
        |chunk: Vec<ObservedRecord>| out.extend(chunk),
    );
    out
}

const MIN_CONDITIONING_MASS: f64 = 1e-12;

/// Exact counterfactual estimands by enumeration of the 64 latent states.
///
/// Every quantity is computed from its defining conditional probability over
/// the joint law of the potential values — not from the identification
/// formulas — so agreement with [`crate::estimand::identify_all`] is a
/// genuine check of the identification argument.
pub fn oracle_estimands(spec: &DgpSpec, x: f64) -> Result<EstimandValues> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError { x });
    }
    let probs = spec.latents_at(x);

    // Event masses over the joint distribution of the potential values.
    let mut p_y1 = 0.0; // Y(1) = 1
    let mut p_y1_y0c = 0.0; // Y(1) = 1, Y(0) = 0
    let mut p_y1_m1 = 0.0; // Y(1) = 1, M(1) = 1
    let mut p_y1_m1_y0c = 0.0; // ... and Y(0) = 0
    let mut p_y1_m1_ind = 0.0; // ... and Y(1,M(0)) = 0, Y(0,M(0)) = 0
    let mut p_y1_m0 = 0.0; // Y(1) = 1, M(1) = 0
    let mut p_y1_m0_y0c = 0.0;
    let mut p_y1_m0_ind = 0.0;
    let mut p_y1_ind = 0.0; // Y(1) = 1, Y(1,M(0)) = 0, Y(0,M(0)) = 0
    let mut p_m1 = 0.0; // M(1) = 1
    let mut p_m1_m0c = 0.0; // M(1) = 1, M(0) = 0
    let mut total = 0.0;

    for state in 0u32..64 {
        let mut bits = [false; 6];
        let mut prob = 1.0;
        for (j, bit) in bits.iter_mut().enumerate() {
            let on = (state >> j) & 1 == 1;
            *bit = on;
            prob *= if on { probs[j] } else { 1.0 - probs[j] };
        }
        // Exposure plays no role in the joint law of the potential values.
        let w = spec.couple(x, false, bits);
        total += prob;

        let y1 = w.natural_outcome(true);
        let y0 = w.natural_outcome(false);
        let indirect_event = !w.outcome_exposed_baseline_mediator() && !y0;

        if w.m1 {
            p_m1 += prob;
            if !w.m0 {
                p_m1_m0c += prob;
            }
        }
        if y1 {
            p_y1 += prob;
            if !y0 {
                p_y1_y0c += prob;
            }
            if indirect_event {
                p_y1_ind += prob;
            }
            if w.m1 {
                p_y1_m1 += prob;
                if !y0 {
                    p_y1_m1_y0c += prob;
                }
                if indirect_event {
                    p_y1_m1_ind += prob;
                }
            } else {
                p_y1_m0 += prob;
                if !y0 {
                    p_y1_m0_y0c += prob;
                }
                if indirect_event {
                    p_y1_m0_ind += prob;
                }
            }
        }
    }
    debug_assert!((total - 1.0).abs() < 1e-12);

    let check = |event: &'static str, mass: f64| -> Result<f64> {
        if mass < MIN_CONDITIONING_MASS {
            Err(Error::DegenerateConditioning { event, mass })
        } else {
            Ok(mass)
        }
    };

    let py1 = check("Y(1) = 1", p_y1)?;
    let py1m1 = check("Y(1) = 1, M(1) = 1", p_y1_m1)?;
    let py1m0 = check("Y(1) = 1, M(1) = 0", p_y1_m0)?;
    let pm1 = check("M(1) = 1", p_m1)?;

    let tau = p_y1_y0c / py1;
    let xi = p_y1_m1 / py1;
    let psi = p_y1_m1_ind / py1m1;
    let delta = p_y1_m1_y0c / py1m1;
    let zeta = delta - psi;
    let alpha_total = p_y1_ind / py1;
    let beta_total = tau - alpha_total;
    let psi_prime = p_y1_m0_ind / py1m0;
    let delta_prime = p_y1_m0_y0c / py1m0;
    let zeta_prime = delta_prime - psi_prime;
    let psi_upper_bound = p_m1_m0c / pm1;

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

/// Total probability mass over the 64 enumerated states; exposed so tests can
/// assert exactness of the enumeration itself.
pub fn oracle_total_mass(spec: &DgpSpec, x: f64) -> f64 {
    let probs = spec.latents_at(x);
    let mut total = math::KahanSum::default();
    for state in 0u32..64 {
        let mut prob = 1.0;
        for (j, p) in probs.iter().enumerate() {
            let on = (state >> j) & 1 == 1;
            prob *= if on { *p } else { 1.0 - *p };
        }
        total.add(prob);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_validates() {
        DgpSpec::default().validate().unwrap();
    }

    #[test]
    fn curve_validation_rejects_out_of_range() {
        let above_one = DgpSpec {
            mu00: CurveSpec::Poly {
                c0: 1.1,
                c1: 0.0,
                c2: 0.0,
            },
            ..DgpSpec::default()
        };
        assert!(matches!(
            above_one.validate(),
            Err(Error::InvalidSpec { .. })
        ));
        // Interior vertex at x = 1/9 stays inside; the endpoint -0.2 does not.
        let below_zero = DgpSpec {
            mu00: CurveSpec::Poly {
                c0: 0.5,
                c1: 0.2,
                c2: -0.9,
            },
            ..DgpSpec::default()
        };
        assert!(below_zero.validate().is_err());
    }

    #[test]
    fn true_nuisance_at_zero_matches_hand_computation() {
        let spec = DgpSpec::default();
        let nu = true_nuisance(&spec, 0.0).unwrap();
        assert!((nu.pi - 0.2689414213699951).abs() < 1e-12);
        assert!((nu.gamma0 - 0.25).abs() < 1e-12);
        assert!((nu.gamma1 - 0.7375).abs() < 1e-12);
        assert!((nu.mu00 - 0.5).abs() < 1e-12);
        assert!((nu.mu01 - 0.3).abs() < 1e-12);
        assert!((nu.mu10 - 0.8).abs() < 1e-12);
        assert!((nu.mu11 - 0.916).abs() < 1e-12);
    }

    #[test]
    fn true_nuisance_at_one_matches_hand_computation() {
        let spec = DgpSpec::default();
        let nu = true_nuisance(&spec, 1.0).unwrap();
        assert!((nu.gamma0 - 0.05).abs() < 1e-12);
        assert!((nu.gamma1 - 0.3825).abs() < 1e-12);
    }

    #[test]
    fn true_nuisance_rejects_out_of_domain() {
        let spec = DgpSpec::default();
        assert!(matches!(
            true_nuisance(&spec, 1.5),
            Err(Error::DomainError { .. })
        ));
        assert!(matches!(
            true_nuisance(&spec, -0.1),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn observe_applies_consistency() {
        let w = PotentialWorld {
            x: 0.4,
            a: true,
            m0: false,
            m1: true,
            y00: false,
            y01: false,
            y10: false,
            y11: true,
        };
        let o = observe(&w);
        assert_eq!((o.a, o.m, o.y), (true, true, true));

        let w0 = PotentialWorld { a: false, ..w };
        let o0 = observe(&w0);
        assert_eq!((o0.a, o0.m, o0.y), (false, false, false));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DgpSpec::default();
        let a = sample_worlds(&spec, 500, 7);
        let b = sample_worlds(&spec, 500, 7);
        assert_eq!(a, b);
        let c = sample_worlds(&spec, 500, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn monotone_coupling_holds_everywhere() {
        let spec = DgpSpec::default();
        for w in sample_worlds(&spec, 50_000, 11) {
            assert!(w.satisfies_monotone_coupling());
        }
    }

    #[test]
    fn independent_mode_violates_coupling_sometimes() {
        let spec = DgpSpec {
            enforce_monotonicity: false,
            ..DgpSpec::default()
        };
        let worlds = sample_worlds(&spec, 50_000, 11);
        let violations = worlds.iter().filter(|w| !w.m1 && w.m0).count();
        assert!(violations > 0, "independent draws should break m1 >= m0");
    }

    #[test]
    fn oracle_mass_sums_to_one() {
        let spec = DgpSpec::default();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((oracle_total_mass(&spec, x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_satisfies_decomposition_identities() {
        let spec = DgpSpec::default();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let v = oracle_estimands(&spec, x).unwrap();
            assert!((v.delta - (v.psi + v.zeta)).abs() < 1e-15);
            assert!(
                (v.tau - (v.delta * v.xi + v.delta_prime * (1.0 - v.xi))).abs() < 1e-12,
                "tau identity failed at x = {x}"
            );
            assert_eq!(v.psi_prime, 0.0);
        }
    }

    #[test]
    fn no_mediator_effect_gives_zero_indirect_probability() {
        // M(1) = M(0) almost surely once the conditional draw never fires.
        let spec = DgpSpec {
            gamma1_tilde: CurveSpec::Poly {
                c0: 1e-9,
                c1: 0.0,
                c2: 0.0,
            },
            ..DgpSpec::default()
        };
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let v = oracle_estimands(&spec, x).unwrap();
            assert!(v.psi.abs() < 1e-6, "psi = {} at x = {x}", v.psi);
            let nu = true_nuisance(&spec, x).unwrap();
            assert!(crate::estimand::identify_psi(&nu).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_conditioning_is_reported() {
        let spec = DgpSpec {
            gamma0: CurveSpec::Poly {
                c0: 5e-13,
                c1: 0.0,
                c2: 0.0,
            },
            gamma1_tilde: CurveSpec::Poly {
                c0: 1e-13,
                c1: 0.0,
                c2: 0.0,
            },
            ..DgpSpec::default()
        };
        assert!(matches!(
            oracle_estimands(&spec, 0.5),
            Err(Error::DegenerateConditioning { .. })
        ));
    }

    #[test]
    fn y01_coupling_keeps_identification_consistent() {
        let spec = DgpSpec {
            y01_coupling: true,
            ..DgpSpec::default()
        };
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let nu = true_nuisance(&spec, x).unwrap();
            let ident = crate::estimand::identify_all(&nu).unwrap();
            let oracle = oracle_estimands(&spec, x).unwrap();
            for ((name, a), (_, b)) in ident.as_pairs().iter().zip(oracle.as_pairs().iter()) {
                assert!(
                    (a - b).abs() < 1e-12,
                    "{name} differs at x = {x}: {a} vs {b}"
                );
            }
        }
    }
}
