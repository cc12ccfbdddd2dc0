//! Soft-max mechanisms: maps from option values to distributions over
//! options.
//!
//! | mechanism      | approximation            | invariance  |
//! |----------------|--------------------------|-------------|
//! | `Exp(λ)`       | additive, in expectation | translation |
//! | `Pow(λ)`       | multiplicative           | scale       |
//! | `PLSoftMax(δ)` | additive, worst case     | translation |
//! | `LogPLSoftMax` | multiplicative, worst    | scale       |
//! | `Sparsemax`    | (baseline projection)    | translation |

mod functions;
mod gaps;
mod matrix;
mod permutation;
mod vector;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use functions::{
    argmax_mechanism, exp_mechanism, log_plsoftmax, plsoftmax, plsoftmax_dense,
    plsoftmax_piece, power_mechanism, sparsemax,
};
pub use gaps::{additive_gap, multiplicative_gap, worst_case_support_ok, SUPPORT_SLACK};
pub use matrix::{Rational, RationalMatrix, SoftMaxMatrix};
pub(crate) use matrix::sm_apply_transpose;
pub use permutation::{active_count, SortPermutation};
pub use vector::{SimplexDistribution, ValueVector, NEG_CLAMP, SUM_TOLERANCE, SUPPORT_THRESHOLD};

use crate::error::{domain, Error, Result};

/// Exact worst-case multiplicative loss of LogPLSoftMax with parameter `delta`.
pub fn log_plsoftmax_multiplicative_loss(delta: f64) -> f64 {
    -(-delta).exp_m1()
}

/// Anything that maps a value vector to a distribution.
pub trait SoftMax: Sync {
    fn evaluate(&self, x: &ValueVector) -> Result<SimplexDistribution>;

    fn label(&self) -> String;

    /// The concrete mechanism, when this is one of the built-ins.
    fn spec(&self) -> Option<MechanismSpec> {
        None
    }
}

/// A built-in mechanism with its parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismSpec {
    Exp { lambda: f64 },
    Pow { lambda: f64 },
    PlSoftMax { delta: f64 },
    LogPlSoftMax { delta: f64 },
    Sparsemax,
    /// The `λ → ∞` limit of `Exp` and `Pow`: a point mass on the first maximizer.
    Argmax,
}

impl MechanismSpec {
    pub fn exp(lambda: f64) -> Result<Self> {
        positive("lambda", lambda).map(|lambda| Self::Exp { lambda })
    }

    pub fn pow(lambda: f64) -> Result<Self> {
        positive("lambda", lambda).map(|lambda| Self::Pow { lambda })
    }

    pub fn plsoftmax(delta: f64) -> Result<Self> {
        positive("delta", delta).map(|delta| Self::PlSoftMax { delta })
    }

    pub fn log_plsoftmax(delta: f64) -> Result<Self> {
        positive("delta", delta).map(|delta| Self::LogPlSoftMax { delta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exp { .. } => "exp",
            Self::Pow { .. } => "pow",
            Self::PlSoftMax { .. } => "plsoftmax",
            Self::LogPlSoftMax { .. } => "logplsoftmax",
            Self::Sparsemax => "sparsemax",
            Self::Argmax => "argmax",
        }
    }

    /// `λ` or `δ`, if the mechanism has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Self::Exp { lambda } | Self::Pow { lambda } => Some(lambda),
            Self::PlSoftMax { delta } | Self::LogPlSoftMax { delta } => Some(delta),
            Self::Sparsemax | Self::Argmax => None,
        }
    }

    /// Whether the mechanism is only defined on non-negative inputs.
    pub fn multiplicative(&self) -> bool {
        matches!(self, Self::Pow { .. } | Self::LogPlSoftMax { .. })
    }

    pub fn evaluate(&self, x: &ValueVector) -> Result<SimplexDistribution> {
        match *self {
            Self::Exp { lambda } => exp_mechanism(x, lambda),
            Self::Pow { lambda } => power_mechanism(x, lambda),
            Self::PlSoftMax { delta } => plsoftmax(x, delta),
            Self::LogPlSoftMax { delta } => log_plsoftmax(x, delta),
            Self::Sparsemax => sparsemax(x),
            Self::Argmax => Ok(argmax_mechanism(x)),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

impl SoftMax for MechanismSpec {
    fn evaluate(&self, x: &ValueVector) -> Result<SimplexDistribution> {
        MechanismSpec::evaluate(self, x)
    }

    fn label(&self) -> String {
        self.to_string()
    }

    fn spec(&self) -> Option<MechanismSpec> {
        Some(*self)
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Exp { lambda } | Self::Pow { lambda } => {
                write!(f, "{}:lambda={}", self.name(), lambda)
            }
            Self::PlSoftMax { delta } | Self::LogPlSoftMax { delta } => {
                write!(f, "{}:delta={}", self.name(), delta)
            }
            Self::Sparsemax | Self::Argmax => f.write_str(self.name()),
        }
    }
}

/// Parses `name[:key=value]`, e.g. `exp:lambda=2` or `sparsemax`.
impl FromStr for MechanismSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r.trim())),
            None => (s.trim(), None),
        };
        let param = |key: &str| -> Result<f64> {
            let Some(rest) = rest else {
                return domain(format!("mechanism `{name}` needs `{key}=<value>`"));
            };
            let Some((k, v)) = rest.split_once('=') else {
                return domain(format!("expected `{key}=<value>`, got `{rest}`"));
            };
            if k.trim() != key {
                return domain(format!("mechanism `{name}` takes `{key}`, not `{}`", k.trim()));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad value for {key}: {e}")))
        };
        let no_param = |spec: Self| -> Result<Self> {
            match rest {
                None | Some("") => Ok(spec),
                Some(r) => domain(format!("mechanism `{name}` takes no parameters, got `{r}`")),
            }
        };
        match name {
            "exp" => Self::exp(param("lambda")?),
            "pow" => Self::pow(param("lambda")?),
            "plsoftmax" => Self::plsoftmax(param("delta")?),
            "logplsoftmax" => Self::log_plsoftmax(param("delta")?),
            "sparsemax" => no_param(Self::Sparsemax),
            "argmax" => no_param(Self::Argmax),
            other => domain(format!("unknown mechanism `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_canonically() {
        for s in [
            "exp:lambda=2",
            "pow:lambda=0.5",
            "plsoftmax:delta=1",
            "logplsoftmax:delta=0.25",
            "sparsemax",
            "argmax",
        ] {
            let m: MechanismSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for s in ["exp", "exp:delta=1", "exp:lambda=-1", "pow:lambda=x", "soft", "argmax:k=1"] {
            assert!(s.parse::<MechanismSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn multiplicative_loss_is_below_delta() {
        for d in [0.01, 0.5, 3.0] {
            let l = log_plsoftmax_multiplicative_loss(d);
            assert!(l > 0.0 && l <= d);
        }
    }
}
