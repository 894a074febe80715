//! Confidence intervals, privacy design and sample-size planning for the
//! Poisson item count technique.

pub mod asymptotic;
pub mod curve;
pub mod dist;
pub mod error;
pub mod exact;
pub mod model;
pub mod normal;
pub mod planner;
pub mod privacy;
pub mod simulate;

pub use asymptotic::{asymptotic_ci, asymptotic_ci_for_z, mm_estimate, mm_variance};
pub use curve::CurveTable;
pub use error::{Error, Result};
pub use exact::{exact_ci, ConfidenceSpec, ExactCi, IntervalResult, Method, TailRule};
pub use model::{IctModel, ModelConfig};
pub use planner::{min_n, Construction, Design, LengthCriterion, PlanOptions};
pub use privacy::{lambda_min, privacy_feasible, PrivacyConfig, PrivacySpec};
pub use simulate::{empirical_coverage, gen_replicate, SimConfig};
