//! Discrete-event simulation of the fixed-computation model.

mod collect;
mod des;

pub use collect::{collection_profile, measure_collection_time, CollectionProfile, CollectionRegime};
pub use des::{des_run, DesSetup};
