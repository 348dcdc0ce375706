//! Command-line driver and HTTP service for the layout engine.

pub mod cli;
pub mod config;
pub mod io;
pub mod service;

use gegraph::pipeline::LayoutRun;
use gegraph::render::LayoutDocument;

/// The run's layout document with the dataset recorded alongside the config.
pub fn layout_document(run: &LayoutRun, dataset: &str) -> LayoutDocument {
    let mut doc = run.document();
    if let Some(params) = doc.params.as_object_mut() {
        params.insert("dataset".into(), dataset.into());
    }
    doc
}
