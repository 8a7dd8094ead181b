//! Instance construction lives in the core incidence module; pipelines get
//! a thin alias.

pub use paralab_core::incidence::{build_random_instance as build_instance, AnchorKind};
