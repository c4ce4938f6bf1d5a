//! Minimal solvers for the rolling-shutter Ackermann model.

pub mod constraint;
pub mod four_line;
pub mod one_line;
pub mod oracle;
pub mod plausibility;
pub mod three_line;

use serde::{Deserialize, Serialize};

use crate::model::RsModel;

pub use constraint::{build_constraint, solve_lambda, LambdaSolution, SegmentConstraint};
pub use four_line::solve_4la;
pub use one_line::{one_line_candidates, solve_1la};
pub use oracle::{oracle_solve, OracleConfig};
pub use plausibility::{plausibility_filter, PlausibilityBounds};
pub use three_line::{solve_3la, three_line_motion};

/// Below this per-row translation the line at infinity and the right-plane
/// inverse depth cannot be recovered.
pub const OBSERVABILITY_THRESHOLD: f64 = 1e-12;

/// Which minimal solver drives the robust estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    /// Rotation and translation, three left segments plus one right segment.
    FourLine,
    /// Pure translation, two segments on one plane plus one on the other.
    ThreeLine,
    /// Pure rotation from a single segment.
    OneLine,
}

impl SolverKind {
    pub fn sample_size(self) -> usize {
        match self {
            SolverKind::FourLine => 4,
            SolverKind::ThreeLine => 3,
            SolverKind::OneLine => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FourLine => "4-line",
            SolverKind::ThreeLine => "3-line",
            SolverKind::OneLine => "1-line",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "4" | "4la" | "4-line" | "four" | "four-line" => Ok(SolverKind::FourLine),
            "3" | "3la" | "3-line" | "three" | "three-line" => Ok(SolverKind::ThreeLine),
            "1" | "1la" | "1-line" | "one" | "one-line" => Ok(SolverKind::OneLine),
            _ => Err(format!("unknown solver '{s}' (expected 4la, 3la or 1la)")),
        }
    }
}

/// One plausible root of a minimal problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverCandidate {
    pub model: RsModel,
    /// Number of distinct real roots of the univariate reduction.
    pub real_roots_count: usize,
    /// Largest constraint residual of the sample relative to its coefficient
    /// scale.
    pub conditioning: f64,
    /// False when the translation is too small to determine `delta` and
    /// `lambda`; both are then reported as 0.
    pub depth_observable: bool,
}
