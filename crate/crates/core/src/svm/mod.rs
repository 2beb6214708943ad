//! Kernel support vector regression and quantile regression.

mod grid;
mod kernel;
mod metrics;
mod model;
mod scaler;
mod smo;

pub use grid::{grid_search, CvRow, GridSpec};
pub use kernel::KernelSpec;
pub use metrics::{evaluate, pinball_loss, EvalReport};
pub use model::{train, train_svqr, train_svr, ModelKind, SvrModel, TrainConfig, TrainStats};
pub use scaler::StandardScaler;
