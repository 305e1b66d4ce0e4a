//! Streaming topic detection.

pub mod background;
pub mod cl_methods;
pub mod embeddings;
pub mod evaluation;
mod bitset;
pub mod clustering;
pub mod fp;
pub mod hybrid;
pub mod preprocess;
pub mod runner;
pub mod stream;
pub mod synth;
pub mod topic;

pub use topic::Topic;
