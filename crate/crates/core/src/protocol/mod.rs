//! Distinguishing shallow symmetric circuits from global symmetric unitaries
//! by tracking where a localized conserved charge ends up.

pub mod charge;
pub mod comb;
pub mod partition;
pub mod run;
pub mod sectors;

pub use charge::ChargeOperator;
pub use partition::Partition;
pub use run::{
    analytic_average, distinguish, prepare_charged_state, required_repetitions, split_brickwork,
    symmetric_brickwork, Decision, Ensemble, ProtocolConfig, ProtocolResult, ProtocolSetup,
    ReadoutMode, SymmetricInstance,
};
pub use sectors::{symmetric_haar, LazySymmetricHaar, SectorLayout, SymmetricUnitary};
