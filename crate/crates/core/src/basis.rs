//! Covariate feature maps shared by the nuisance fits and the projection.

use serde::{Deserialize, Serialize};

/// A feature map from a covariate vector to a design row.
///
/// `Polynomial { degree }` produces an intercept plus per-coordinate powers
/// `x_j^p` for `p = 1..=degree` (no cross terms). With a scalar covariate and
/// degree 1 this is the working model `{1, x}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    Polynomial { degree: usize },
}

impl Default for Basis {
    fn default() -> Self {
        Basis::Polynomial { degree: 1 }
    }
}

impl Basis {
    /// Number of features for a `dim`-dimensional covariate.
    pub fn len(&self, dim: usize) -> usize {
        match *self {
            Basis::Polynomial { degree } => 1 + dim * degree,
        }
    }

    /// Evaluate into a caller-provided buffer (cleared first).
    pub fn eval_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match *self {
            Basis::Polynomial { degree } => {
                out.push(1.0);
                for &xj in x {
                    let mut p = 1.0;
                    for _ in 0..degree {
                        p *= xj;
                        out.push(p);
                    }
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len(x.len()));
        self.eval_into(x, &mut out);
        out
    }
}
