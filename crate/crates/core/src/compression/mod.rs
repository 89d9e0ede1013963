//! Multisets, compression schemes and sampling-based property checks.

mod multiset;
mod properties;
mod scheme;

pub use multiset::Multiset;
pub use properties::{
    check_coherence_i, check_coherence_ii, check_idempotence, check_inclusion, check_non_associativity,
    check_preference, check_reconstruction, CheckConfig, Generator, Property, PropertyReport,
};
pub use scheme::{
    augment, change_of_compression, changes_compression, checked_compress, Augmented, Compressor, Learner,
    SchemeError,
};
