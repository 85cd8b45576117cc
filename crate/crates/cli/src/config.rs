//! Run configuration: a single JSON document with defaults for every key.
//! Unknown keys are rejected so typos surface instead of silently running
//! the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mpoc::basis::Basis;
use mpoc::eif::Target;
use mpoc::montecarlo::{ProjectionSettings, SimulationConfig};
use mpoc::world::DgpSpec;

use crate::CliError;

/// One covariate point for interval evaluation; accepts a bare number for
/// scalar covariates or an array for vector covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPoint(pub Vec<f64>);

impl<'de> Deserialize<'de> for EvalPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Scalar(f64),
            Vector(Vec<f64>),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Scalar(x) => EvalPoint(vec![x]),
            Raw::Vector(v) => EvalPoint(v),
        })
    }
}

/// Settings for the real-data estimation command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub targets: Vec<Target>,
    pub k_folds: usize,
    /// Basis for the logistic nuisance fits.
    pub nuisance_basis: Basis,
    pub projection: ProjectionSettings,
    /// Covariate points at which to report `g(x*; beta_hat)` with intervals.
    pub eval_points: Vec<EvalPoint>,
    /// Also write the per-record pseudo-outcomes to
    /// `pseudo_outcomes.csv` for diagnostics.
    pub export_pseudo_outcomes: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            targets: vec![Target::Psi, Target::Zeta, Target::Delta],
            k_folds: 2,
            nuisance_basis: Basis::Polynomial { degree: 2 },
            projection: ProjectionSettings::default(),
            eval_points: vec![EvalPoint(vec![0.75])],
            export_pseudo_outcomes: false,
        }
    }
}

/// Reference truth values printed alongside the simulated truth in the
/// rendered report, for comparison with previously published runs of this
/// experiment design.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceTruth {
    pub indirect: f64,
    pub direct: f64,
    pub total: f64,
}

impl Default for ReferenceTruth {
    fn default() -> Self {
        Self {
            indirect: 0.44,
            direct: 0.22,
            total: 0.65,
        }
    }
}

impl ReferenceTruth {
    pub fn for_target(&self, target: Target) -> f64 {
        match target {
            Target::Psi => self.indirect,
            Target::Zeta => self.direct,
            Target::Delta => self.total,
        }
    }
}

/// The full resolved configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dgp: DgpSpec,
    pub simulation: SimulationConfig,
    pub estimate: EstimateConfig,
    /// Every command writes only below this directory.
    pub output_dir: PathBuf,
    /// Master seed; overrides `simulation.master_seed` when set.
    pub seed: Option<u64>,
    /// Grid size for the figures command.
    pub grid_points: usize,
    /// When set, the simulate command also exports this many sampled records
    /// and full counterfactual tables.
    pub export_sample: Option<usize>,
    pub reference_truth: ReferenceTruth,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dgp: DgpSpec::default(),
            simulation: SimulationConfig::default(),
            estimate: EstimateConfig::default(),
            output_dir: PathBuf::from("results"),
            seed: None,
            grid_points: 201,
            export_sample: None,
            reference_truth: ReferenceTruth::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut config = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
        };
        if let Some(seed) = config.seed {
            config.simulation.master_seed = seed;
        }
        Ok(config)
    }

    /// Effective master seed for every command.
    pub fn master_seed(&self) -> u64 {
        self.simulation.master_seed
    }

    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        threads: Option<usize>,
    ) {
        if let Some(s) = seed {
            self.seed = Some(s);
            self.simulation.master_seed = s;
        }
        if let Some(o) = out {
            self.output_dir = o;
        }
        if let Some(t) = threads {
            self.simulation.threads = Some(t);
        }
    }

    pub fn ensure_output_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.output_dir).map_err(|e| {
            CliError::Config(format!(
                "cannot create output directory {}: {e}",
                self.output_dir.display()
            ))
        })
    }

    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = RunConfig::default();
        let s = c.resolved_json();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.grid_points, 201);
        assert_eq!(back.simulation.n_reps, c.simulation.n_reps);
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = serde_json::from_str::<RunConfig>("{\"grid_pints\": 100}").unwrap_err();
        assert!(err.to_string().contains("grid_pints"), "{err}");
    }

    #[test]
    fn eval_points_accept_scalars_and_vectors() {
        let c: EstimateConfig =
            serde_json::from_str("{\"eval_points\": [0.25, [0.5, 0.5]]}").unwrap();
        assert_eq!(c.eval_points[0].0, vec![0.25]);
        assert_eq!(c.eval_points[1].0, vec![0.5, 0.5]);
    }

    #[test]
    fn top_level_seed_overrides_simulation_seed() {
        let c = RunConfig::load(None).unwrap();
        assert_eq!(c.master_seed(), SimulationConfig::default().master_seed);
        let parsed: RunConfig = serde_json::from_str("{\"seed\": 5}").unwrap();
        let mut parsed = parsed;
        if let Some(seed) = parsed.seed {
            parsed.simulation.master_seed = seed;
        }
        assert_eq!(parsed.simulation.master_seed, 5);
    }
}
