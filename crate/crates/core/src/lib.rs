//! Thermal unit commitment: model, economic dispatch, the GAMOM optimizer,
//! GA/PSO baselines and an exhaustive oracle for small instances.

pub mod baselines;
pub mod dispatch;
pub mod error;
pub mod fitness;
pub mod gamom;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod repair;
pub mod rng;

pub use error::{DispatchError, ModelError, OracleError, ParamError};
pub use fitness::{fitness, EvaluatedSchedule, RunOutcome, StopReason, TracePoint};
pub use gamom::{run, GamomParams};
pub use model::{
    BalanceMode, CommitmentMatrix, DispatchMatrix, ReservePolicy, UCInstance, UnitSpec,
};
