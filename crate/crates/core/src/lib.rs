//! Learning the structure and parameters of linear influence games from
//! observed joint actions.

pub mod analysis;
pub mod convex;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod game;
pub mod model;
pub mod smooth;

pub use analysis::{BoundReport, EvalMetrics};
pub use convex::{ConvexMethod, ConvexTrainConfig, TrainResult};
pub use dataset::JointActionDataset;
pub use error::{Error, Result};
pub use game::{
    enumerate_equilibria, hyperplane_vertex_count, is_equilibrium, true_proportion, EquilibriaSet,
    InfluenceGame, JointAction, PlayerRow, DEFAULT_TOL, ENUMERATION_CAP,
};
pub use model::{
    avg_log_likelihood, empirical_proportion, kl_bernoulli, kl_bounds, optimal_q, pmf, sample,
    MixtureModel,
};
pub use smooth::{SigmoidParams, SmoothMode, SmoothTrainConfig};
