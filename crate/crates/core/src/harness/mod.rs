//! Experiment orchestration: configuration, data preparation, end-to-end
//! runs, join benchmarks and space reports.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod generators;
pub mod space;
pub mod split;

use std::fs::File;
use std::io::BufReader;

pub use bench::{bench_join, random_queries, BenchRow};
pub use config::{DataConfig, ExperimentConfig, GeneratorKind};
pub use experiment::{evaluate_saved, run_experiment, ExperimentReport, Record};
pub use space::{report_space, SpaceReport};
pub use split::{split_inductive, split_queries, DataSplit, SplitFractions, SplitSet};

use crate::graph::{load_attributes, load_edge_list, read_queries, Graph, Query};
use crate::{Error, Result};

/// The loaded or generated graph, plus explicit positive queries if the
/// config names a query file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub queries: Option<Vec<Query>>,
}

impl Dataset {
    pub fn load(cfg: &DataConfig) -> Result<Self> {
        let mut graph = match &cfg.edges {
            Some(path) => load_edge_list(BufReader::new(File::open(path)?), true)?,
            None => match cfg.generator {
                GeneratorKind::Sbm => generators::sbm(
                    cfg.nodes,
                    cfg.blocks,
                    cfg.p_in,
                    cfg.p_out,
                    cfg.generator_seed,
                )?,
                GeneratorKind::Ring => generators::ring_lattice(cfg.nodes, cfg.ring_neighbors)?,
                GeneratorKind::Ba => generators::preferential_attachment(
                    cfg.nodes,
                    cfg.ba_edges,
                    cfg.generator_seed,
                )?,
            },
        };
        if let Some(path) = &cfg.attributes {
            let mut attrs =
                load_attributes(BufReader::new(File::open(path)?), Some(graph.node_count()))?;
            if cfg.standardize_attributes {
                attrs.standardize();
            }
            graph = graph.with_attributes(attrs)?;
        }
        let queries = match &cfg.queries {
            Some(path) => {
                let file = read_queries(BufReader::new(File::open(path)?))?;
                if file.labels.as_ref().is_some_and(|l| l.iter().any(|&y| !y)) {
                    return Err(Error::validation(
                        "query file for splitting must hold positives only",
                    ));
                }
                Some(file.queries)
            }
            None => None,
        };
        Ok(Self { graph, queries })
    }
}
