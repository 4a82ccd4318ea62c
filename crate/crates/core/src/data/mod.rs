//! Interaction graphs, knowledge graphs, splits, synthetic data and
//! perturbations used by the noise and long-tail studies.

mod graph;
mod io;
mod kg;
mod split;
mod synth;

pub use graph::InteractionGraph;
pub use io::{
    load_interactions, load_kg, read_interaction_rows, write_interactions, write_kg, write_noise_labels,
    write_user_lists, Loaded,
};
pub use kg::{inject_kg_noise, KnowledgeGraph, Triple};
pub use split::{longtail_entity_filter, split_longtail_items, split_sparse_users, DataSplit, Grouping};
pub use synth::{synth_generate, SynthConfig, SynthData};
