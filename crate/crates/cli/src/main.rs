use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hopsim::engine::config::PartitionerKind;
use hopsim::engine::merge::merge_controller;
use hopsim::engine::sim::{build_partition, load_graph, Cluster};
use hopsim::graph::io::{write_csr_binary, write_edge_list, write_partition_map};
use hopsim::graph::partition::edge_cut;
use hopsim::report::locality::write_locality_csv;
use hopsim::report::{compare_strategies, locality_report, write_metrics_csv, LocalityConfig, MetricsRow, RootCounting};
use hopsim::{EpochMetrics, SamplingMode, Strategy, TrainConfig};

#[derive(Parser)]
#[command(name = "hopsim", version, about = "Simulate micrograph-based distributed GNN training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum GraphFormat {
    Edges,
    Csr,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Node,
    Layer,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured graph as an edge list or CSR binary.
    GenGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "edges")]
        format: GraphFormat,
    },
    /// Write `vertex server` lines for the configured partitioner.
    Partition {
        #[command(flatten)]
        common: Common,
    },
    /// Micrograph and subgraph co-location ratios.
    Locality {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        servers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        layers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "node")]
        modes: Vec<Mode>,
        /// Partitioners to compare; the configured one when omitted.
        #[arg(long, value_delimiter = ',')]
        partitioners: Vec<String>,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 8)]
        iterations: usize,
        /// Leave the root out of the co-located count.
        #[arg(long)]
        non_root: bool,
    },
    /// Train with the configured strategy; one CSV row per epoch.
    Train {
        #[command(flatten)]
        common: Common,
        /// Write final parameters, one value per line.
        #[arg(long)]
        dump_params: Option<PathBuf>,
        /// Write `epoch iter model root,root,...` lines.
        #[arg(long)]
        dump_batches: Option<PathBuf>,
    },
    /// Run the merge controller; metrics to --out, decisions to stderr.
    MergeStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        no_pregather: bool,
    },
    /// Run every strategy on the same seeds.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> hopsim::Result<TrainConfig> {
    let mut cfg = match &common.config {
        Some(path) => TrainConfig::parse(&fs::read_to_string(path).map_err(|e| {
            hopsim::Error::Config(format!("{}: {e}", path.display()))
        })?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_rows(metrics: &[EpochMetrics], path: &Option<PathBuf>) -> Result<()> {
    let rows: Vec<MetricsRow> = metrics.iter().map(MetricsRow::from).collect();
    let mut w = output(path)?;
    write_metrics_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_partitioner(name: &str, cfg: &TrainConfig) -> hopsim::Result<PartitionerKind> {
    match name {
        "hash" => Ok(PartitionerKind::Hash),
        "greedy" => Ok(match cfg.partitioner {
            PartitionerKind::Greedy { slack } => PartitionerKind::Greedy { slack },
            _ => PartitionerKind::Greedy { slack: 0.05 },
        }),
        other => Err(hopsim::Error::Config(format!("unknown partitioner {other:?}"))),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraph { common, format } => {
            let cfg = load_config(&common)?;
            let g = load_graph(&cfg.graph, cfg.graph_seed())?;
            let mut w = output(&common.out)?;
            match format {
                GraphFormat::Edges => write_edge_list(&g, &mut w)?,
                GraphFormat::Csr => write_csr_binary(&g, &mut w)?,
            }
            w.flush()?;
            eprintln!("vertices {} edges {}", g.n_vertices(), g.n_edges());
        }
        Command::Partition { common } => {
            let cfg = load_config(&common)?;
            let g = load_graph(&cfg.graph, cfg.graph_seed())?;
            let p = build_partition(&g, &cfg.partitioner, cfg.servers, cfg.partition_seed())?;
            let mut w = output(&common.out)?;
            write_partition_map(&p, &mut w)?;
            w.flush()?;
            eprintln!("parts {:?} edge cut {:.4}", p.part_sizes(), edge_cut(&g, &p)?);
        }
        Command::Locality {
            common,
            servers,
            layers,
            modes,
            partitioners,
            batch,
            iterations,
            non_root,
        } => {
            let cfg = load_config(&common)?;
            let g = load_graph(&cfg.graph, cfg.graph_seed())?;
            let partitioners = if partitioners.is_empty() {
                vec![cfg.partitioner.clone()]
            } else {
                partitioners
                    .iter()
                    .map(|p| parse_partitioner(p, &cfg))
                    .collect::<hopsim::Result<_>>()?
            };
            let lc = LocalityConfig {
                servers,
                layers,
                fanout: cfg.fanouts[0],
                modes: modes
                    .iter()
                    .map(|m| match m {
                        Mode::Node => SamplingMode::NodeWise,
                        Mode::Layer => SamplingMode::LayerWise,
                    })
                    .collect(),
                partitioners,
                batch,
                iterations,
                seed: cfg.sampler_seed(),
                counting: if non_root {
                    RootCounting::NonRoot
                } else {
                    RootCounting::Inclusive
                },
            };
            let rows = locality_report(&g, &lc)?;
            let mut w = output(&common.out)?;
            write_locality_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Train {
            common,
            dump_params,
            dump_batches,
        } => {
            let cfg = load_config(&common)?;
            let cluster = Cluster::from_config(&cfg)?;
            if let Some(path) = dump_batches {
                let mut text = String::new();
                for e in 0..cfg.epochs {
                    for (it, batches) in cluster.epoch_batches(e).iter().enumerate() {
                        for (d, roots) in batches.iter().enumerate() {
                            let list: Vec<String> = roots.iter().map(u32::to_string).collect();
                            text.push_str(&format!("{e} {it} {d} {}\n", list.join(",")));
                        }
                    }
                }
                write_text(&path, &text)?;
            }
            let (metrics, params) = train(&cluster, &cfg)?;
            write_rows(&metrics, &common.out)?;
            if let Some(path) = dump_params {
                write_text(&path, &params)?;
            }
        }
        Command::MergeStudy {
            common,
            no_pregather,
        } => {
            let cfg = load_config(&common)?;
            let cluster = Cluster::from_config(&cfg)?;
            let study = merge_controller(&cluster, !no_pregather, cfg.epochs, cfg.k)?;
            eprintln!("epoch,removed_step,baseline_seconds,trial_seconds,accepted");
            for t in &study.trials {
                eprintln!(
                    "{},{},{},{},{}",
                    t.epoch, t.removed_step, t.baseline_seconds, t.trial_seconds, t.accepted
                );
            }
            eprintln!("columns per epoch {:?}", study.columns_per_epoch);
            write_rows(&study.epochs, &common.out)?;
        }
        Command::Compare { common } => {
            let cfg = load_config(&common)?;
            write_rows(&compare_strategies(&cfg)?, &common.out)?;
        }
    }
    Ok(())
}

/// Per-epoch metrics and the final parameter dump of model 0.
fn train(cluster: &Cluster, cfg: &TrainConfig) -> hopsim::Result<(Vec<EpochMetrics>, String)> {
    if let Strategy::HopGnn {
        pregather,
        merge: true,
    } = cfg.strategy
    {
        let study = merge_controller(cluster, pregather, cfg.epochs, cfg.k)?;
        return Ok((study.epochs, study.final_model.dump()));
    }
    let mut trainer = hopsim::engine::sim::Trainer::new(cluster);
    let mut metrics = Vec::with_capacity(cfg.epochs);
    for e in 0..cfg.epochs {
        metrics.push(trainer.run_epoch(cfg.strategy, e, &[])?.metrics);
    }
    Ok((metrics, trainer.models()[0].dump()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hopsim::Error>() {
        Some(e) if e.is_invariant() => 3,
        Some(
            hopsim::Error::Config(_)
            | hopsim::Error::Parse { .. }
            | hopsim::Error::Range { .. }
            | hopsim::Error::InvalidArgument(_)
            | hopsim::Error::Format(_)
            | hopsim::Error::ShapeMismatch { .. }
            | hopsim::Error::Io(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let inv = anyhow::Error::from(hopsim::Error::Invariant("x".into()));
        assert_eq!(exit_code(&inv), 3);
        let cfg = anyhow::Error::from(hopsim::Error::Config("x".into()));
        assert_eq!(exit_code(&cfg), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
