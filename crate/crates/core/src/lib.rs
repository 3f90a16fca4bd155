//! Workbench for static JavaScript call graphs: a field-based extractor, a
//! unified interchange format, merging and diffing of tool outputs,
//! precision/recall metrics, a ground-truth program generator and a
//! memory/time benchmark harness.

pub mod adapters;
pub mod bench;
pub mod compare;
pub mod extractor;
pub mod frontend;
pub mod generator;
pub mod metrics;
pub mod model;
