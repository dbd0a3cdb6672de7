//! Learning a shallow circuit from oracle access and building `U ⊗ U†`.

mod double;
mod learn;
mod oracle;
mod tomography;

pub use double::{
    assemble_double_circuit, conjugated_swap, reference_double, verify_double, DoubleCircuitRecord,
    LearnedDoubleCircuit, VerifyReport,
};
pub use learn::{
    batch_learn, exact_images, learn_image, learn_site_images, sequential_learn, shot_schedule, site_groups,
    HeisenbergImage, ImageRecord, LearnOutcome, TomographyMode, TomographySettings,
};
pub use oracle::OracleChannel;
pub use tomography::{is_prime, multinomial, project_to_density, MubTomography};
