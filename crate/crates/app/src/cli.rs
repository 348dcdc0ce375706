use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gegraph::explore::{expand_community, related_nodes};
use gegraph::metrics::{full_report, LayoutUnderTest, MetricParams, MetricsReport};
use gegraph::pipeline::{load_dataset, run_layout, Session};
use gegraph::render::{layout_svg, LayoutDocument};
use gegraph::walk::Proximity;

use crate::config::PipelineArgs;
use crate::io::write_atomic;
use crate::layout_document;

#[derive(Parser, Debug)]
#[command(name = "gegraph", version, about = "Embedding-enhanced, community-aware graph layouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute a layout and write it as JSON.
    Layout {
        #[command(flatten)]
        args: PipelineArgs,
        /// Layout JSON destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Walk corpus, one walk per line.
        #[arg(long)]
        walks_out: Option<PathBuf>,
        /// Layout embedding as JSON.
        #[arg(long)]
        embedding_out: Option<PathBuf>,
    },
    /// Score layout files and print one CSV row per file.
    Metrics {
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the community aggregation, or one community expanded.
    Aggregate {
        #[command(flatten)]
        args: PipelineArgs,
        #[arg(long)]
        expand: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the nodes most similar to one node.
    Related {
        #[command(flatten)]
        args: PipelineArgs,
        #[arg(long)]
        node: String,
        /// local, global or attribute.
        #[arg(long, default_value = "local")]
        strategy: String,
        #[arg(long = "top", default_value_t = 10)]
        top: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the explorer API.
    Serve {
        #[command(flatten)]
        args: PipelineArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout
                .write_all(contents.as_bytes())
                .and_then(|_| if contents.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") });
            match written {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("outputs always serialize")
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Layout {
            args,
            out,
            svg,
            walks_out,
            embedding_out,
        } => {
            let config = args.resolve()?;
            let g = load_dataset(&config.dataset)?;
            let run = run_layout(&g, &config.pipeline)?;
            let doc = layout_document(&run, &config.dataset);
            if let Some(path) = &svg {
                write_atomic(path, layout_svg(&doc).map_err(anyhow::Error::msg)?.as_bytes())?;
            }
            if let Some(path) = &walks_out {
                write_atomic(path, run.embedding.corpus.to_text(&run.prepared.extended).as_bytes())?;
            }
            if let Some(path) = &embedding_out {
                write_atomic(path, run.embedding.embedding.to_json(run.graph().ids()).as_bytes())?;
            }
            emit(out.as_deref(), &doc.to_json())?;
        }
        Command::Metrics { files, out } => {
            let (table, failures) = metrics_table(&files)?;
            emit(out.as_deref(), &table)?;
            if failures > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Aggregate { args, expand, out } => {
            let config = args.resolve()?;
            let session = Session::build(&load_dataset(&config.dataset)?, &config.pipeline)?;
            let json = match expand {
                None => to_json(&session.aggregation),
                Some(c) => {
                    let run = &session.run;
                    to_json(&expand_community(
                        &session.aggregation,
                        &run.layout.positions,
                        run.graph().edges(),
                        run.communities(),
                        run.graph().ids(),
                        c,
                    )?)
                }
            };
            emit(out.as_deref(), &json)?;
        }
        Command::Related {
            args,
            node,
            strategy,
            top,
            out,
        } => {
            let config = args.resolve()?;
            let strategy: Proximity = strategy.parse()?;
            let session = Session::build(&load_dataset(&config.dataset)?, &config.pipeline)?;
            let query = session
                .graph()
                .index_of(&node)
                .with_context(|| format!("unknown node {node:?}"))?;
            let result = related_nodes(query, strategy, top, &session.spaces, session.graph().ids())?;
            emit(out.as_deref(), &to_json(&result))?;
        }
        Command::Serve { args, host, port } => {
            let config = args.resolve()?;
            let state = crate::service::AppState::build(config)?;
            tokio::runtime::Runtime::new()?.block_on(crate::service::serve(state, &host, port))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Header plus one row per readable layout file; unreadable files are
/// reported on standard error and counted.
pub fn metrics_table(files: &[PathBuf]) -> Result<(String, usize)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset", "method"];
    header.extend(MetricsReport::COLUMNS);
    w.write_record(&header)?;
    let mut failures = 0;
    for path in files {
        match score_file(path) {
            Ok((dataset, method, report)) => {
                let mut row = vec![dataset, method];
                row.extend(report.values().iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e:#}", path.display());
                failures += 1;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv flush failed: {e}"))?;
    Ok((String::from_utf8(bytes)?, failures))
}

fn score_file(path: &Path) -> Result<(String, String, MetricsReport)> {
    let text = std::fs::read_to_string(path)?;
    let doc: LayoutDocument = serde_json::from_str(&text).context("not a layout document")?;
    let edges = doc.edge_indices().map_err(anyhow::Error::msg)?;
    let positions = doc.positions();
    if positions.iter().flatten().any(|x| !x.is_finite()) {
        anyhow::bail!("non-finite coordinates");
    }
    let communities = doc.communities();
    let params: MetricParams = doc
        .params
        .get("metrics")
        .and_then(|m| serde_json::from_value(m.clone()).ok())
        .unwrap_or_default();
    let report = full_report(
        &LayoutUnderTest {
            positions: &positions,
            edges: &edges,
            communities: &communities,
        },
        params,
    );
    let text_param = |key: &str| doc.params.get(key).and_then(|v| v.as_str()).map(str::to_string);
    let dataset = text_param("dataset")
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let method = text_param("method").unwrap_or_else(|| "unknown".to_string());
    Ok((dataset, method, report))
}
