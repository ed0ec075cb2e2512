//! Numerical toolkit for rated extremal principles in `R^n`.

pub mod error;
pub mod family;
pub mod feasibility;
pub mod finite_extremality;
pub mod geometry;
pub mod infinite_extremality;
pub mod intersection_calculus;
pub mod linalg;
pub mod normal_cones;
pub mod runner;
pub mod sampling;
pub mod scalar;
pub mod sip_optimality;
pub mod tolerances;

pub use error::{Error, Result, SchemaIssue};
pub use family::{IndexedFamily, RateFunction, SelectionRule};
pub use finite_extremality::{RatedQuery, TranslationSchedule};
pub use geometry::{Halfspace, Point, ScalarFunction, SetOracle, Sign};
pub use normal_cones::{ConeSample, DualVector, RadiusLadder};
pub use scalar::Scalar;
pub use tolerances::Tolerances;

pub type Point64 = Point<f64>;
pub type SetOracle64 = SetOracle<f64>;
pub type DualVector64 = DualVector<f64>;
pub type IndexedFamily64 = IndexedFamily<f64>;
pub type RateFunction64 = RateFunction<f64>;
pub type Tolerances64 = Tolerances<f64>;

pub type Point32 = Point<f32>;
pub type SetOracle32 = SetOracle<f32>;
pub type DualVector32 = DualVector<f32>;
pub type IndexedFamily32 = IndexedFamily<f32>;
pub type RateFunction32 = RateFunction<f32>;
pub type Tolerances32 = Tolerances<f32>;
