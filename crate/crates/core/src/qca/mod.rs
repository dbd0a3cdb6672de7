//! One-dimensional quantum cellular automata: image tables, the GNVW
//! index, staircase compilation and the two-layer split of circuits.

mod blend;
mod compile;
mod index;
mod map;
mod staircase;

pub use blend::{
    band_qca, translation_period, truncate_halfspace, two_layer_decompose, window_truncate, BandQCA, Block,
    Spacing, TwoLayer,
};
pub use compile::{compile_qca, CompileSpec, Compiled, GateCounts, ShiftSpec};
pub use index::gnvw_index;
pub use map::{
    compose_qca, factor_shift_qca, invert_qca, qca_from_circuit, qca_from_gates, ring_distance, shift_qca,
    verify_qca, ImagePair, Part, QCAMap, QcaRecord, QcaReport, TensorFactorization,
};
pub use staircase::{
    beta_direct, compile_shift, partial_swap, pump_subalgebra, StaircaseCircuit, StaircaseRecord,
};
