pub mod embed;
pub mod explore;
pub mod graph;
pub mod insight;
pub mod layout;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod walk;
