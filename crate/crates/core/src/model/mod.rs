//! Shared domain types.

pub mod dataset;
pub mod estimator;
pub mod logreg;
pub mod point;
pub mod pool;
pub mod problem;
pub mod quadratic;
pub mod rng;
pub mod time;

pub use dataset::{Dataset, Format};
pub use estimator::{estimator_moments, Distribution, Draw, Estimator, ProgressRule};
pub use logreg::{logreg_problem, LogisticRegression};
pub use point::Point;
pub use pool::WorkerPool;
pub use problem::{
    finite_difference, gradient_check, pseudo_huber_problem, ConvexInfo, FiniteSum, MeanObjective, Objective,
    ProblemSpec, PseudoHuber, Zero,
};
pub use quadratic::{heterogeneous_linear_terms, quadratic_problem, quadratic_with_linear, TridiagQuadratic};
pub use rng::RngContract;
pub use time::VirtualTime;
