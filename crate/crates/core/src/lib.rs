//! Environment-aware resource management: predict the throughput a harsh
//! environment leaves available, then share it among competing services
//! through a priced power-control game.
//!
//! - [`problem`]: attention/allocation/budget objects and the utility sum.
//! - [`envgen`]: synthetic measurement campaigns and their throughput oracle.
//! - [`predictor`]: three-branch 1-D CNN regressor trained with Adam.
//! - [`game`]: SINR model, best response, equilibrium search, price tuning.
//! - [`servicemgmt`]: service groups with backup failover.

pub mod envgen;
pub mod game;
pub mod predictor;
pub mod problem;
pub mod servicemgmt;
