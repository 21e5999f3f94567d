//! The simulated cluster and the per-iteration logic of every strategy.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{GraphSource, PartitionerKind, Strategy, TrainConfig};
use super::cost::{add_inbound, simulated_step_time, slowest, CostModel, ServerLoad};
use super::metrics::{alpha, EpochMetrics};
use super::trace::TraceTable;
use crate::error::{Error, Result};
use crate::featstore::ledger::{Category, CommLedger};
use crate::featstore::pregather::{execute_pregather, plan_pregather};
use crate::featstore::{charge_fetch, init_features, read_feature_file, FeatureSource, FeatureStore, ELEM_BYTES};
use crate::gnn::accum::charge_ring_allreduce;
use crate::gnn::{accumulate, forward, loss_and_backward, sync_and_update, GradAccumulator, LabelOracle, ModelState};
use crate::graph::io::{load_edge_list, load_partition_map, read_csr_binary};
use crate::graph::partition::{partition_greedy_locality, partition_hash, PartitionMap, ServerId};
use crate::graph::sbm::{generate_sbm, SbmParams};
use crate::graph::{Graph, VertexId};
use crate::rng::{mix_all, stream};
use crate::sampler::{load_imbalance, redistribute_roots, sample_micrograph, Micrograph, MiniBatchPlan, SamplerConfig};

/// Bytes charged per subgraph edge shipped by the naive strategy.
pub const TOPOLOGY_BYTES_PER_EDGE: u64 = 8;

/// Static inputs of a simulation: data placement, sampler, initial model and
/// cost model. One server hosts one model, so `N = S`.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub graph: Graph,
    pub partition: PartitionMap,
    pub features: FeatureStore,
    pub labels: LabelOracle,
    pub sampler: SamplerConfig,
    pub initial_model: ModelState,
    pub cost: CostModel,
    /// Roots per model per iteration.
    pub batch: usize,
    pub iterations: Option<usize>,
    pub lr: f64,
    pub batch_seed: u64,
    pub parallel: bool,
    pub train_vertices: Vec<VertexId>,
}

pub fn load_graph(source: &GraphSource, seed: u64) -> Result<Graph> {
    match source {
        GraphSource::Sbm {
            blocks,
            p_in,
            p_out,
        } => generate_sbm(&SbmParams {
            block_sizes: blocks.clone(),
            p_in: *p_in,
            p_out: *p_out,
            seed,
        }),
        GraphSource::EdgeList(path) => load_edge_list(BufReader::new(File::open(path)?), None),
        GraphSource::CsrBinary(path) => read_csr_binary(BufReader::new(File::open(path)?)),
    }
}

pub fn build_partition(
    g: &Graph,
    kind: &PartitionerKind,
    servers: usize,
    seed: u64,
) -> Result<PartitionMap> {
    match kind {
        PartitionerKind::Hash => partition_hash(g, servers, seed),
        PartitionerKind::Greedy { slack } => partition_greedy_locality(g, servers, *slack, seed),
        PartitionerKind::File(path) => {
            let p = load_partition_map(BufReader::new(File::open(path)?), g.n_vertices())?;
            if p.n_servers() > servers {
                return Err(Error::Config(format!(
                    "partition file uses {} servers, config has {servers}",
                    p.n_servers()
                )));
            }
            PartitionMap::new(p.homes().to_vec(), servers)
        }
    }
}

impl Cluster {
    pub fn from_config(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let graph = load_graph(&cfg.graph, cfg.graph_seed())?;
        let partition = build_partition(&graph, &cfg.partitioner, cfg.servers, cfg.partition_seed())?;
        let source = match &cfg.feature_file {
            Some(path) => read_feature_file(BufReader::new(File::open(path)?))?,
            None => FeatureSource::Generated {
                seed: cfg.feature_seed(),
            },
        };
        let features = init_features(&partition, cfg.dim, source)?;
        let model = ModelState::init(cfg.arch, cfg.dim, &cfg.hidden, cfg.classes, cfg.model_seed())?;
        let sampler = SamplerConfig {
            fanouts: cfg.fanouts.clone(),
            mode: cfg.sampling,
            seed: cfg.sampler_seed(),
        };
        Self::new(
            graph,
            partition,
            features,
            LabelOracle::new(cfg.classes, cfg.label_seed())?,
            sampler,
            model,
            cfg.cost,
            cfg.batch,
            cfg.iterations,
            cfg.lr,
            cfg.batch_seed(),
            cfg.parallel,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: Graph,
        partition: PartitionMap,
        features: FeatureStore,
        labels: LabelOracle,
        sampler: SamplerConfig,
        initial_model: ModelState,
        cost: CostModel,
        batch: usize,
        iterations: Option<usize>,
        lr: f64,
        batch_seed: u64,
        parallel: bool,
    ) -> Result<Self> {
        if partition.n_vertices() != graph.n_vertices() || features.n_vertices() != graph.n_vertices() {
            return Err(Error::invalid("graph, partition and features disagree on vertex count"));
        }
        if features.dim() != initial_model.feature_dim() {
            return Err(Error::invalid("feature dim does not match model input dim"));
        }
        if sampler.n_layers() != initial_model.n_layers() {
            return Err(Error::invalid("sampler hops must equal model layers"));
        }
        sampler.validate()?;
        cost.validate()?;
        let train_vertices = (0..graph.n_vertices() as VertexId).collect();
        Ok(Self {
            graph,
            partition,
            features,
            labels,
            sampler,
            initial_model,
            cost,
            batch,
            iterations,
            lr,
            batch_seed,
            parallel,
            train_vertices,
        })
    }

    pub fn n_servers(&self) -> usize {
        self.partition.n_servers()
    }

    pub fn iterations_per_epoch(&self) -> usize {
        let full = self.train_vertices.len() / (self.batch * self.n_servers());
        self.iterations.map_or(full, |i| i.min(full))
    }

    /// `[iteration][model]` root lists: a keyed shuffle of the training
    /// vertices cut into global batches.
    pub fn epoch_batches(&self, epoch: usize) -> Vec<Vec<Vec<VertexId>>> {
        let mut order = self.train_vertices.clone();
        order.shuffle(&mut stream(mix_all(self.batch_seed, &[0xba7c4, epoch as u64])));
        let n = self.n_servers();
        (0..self.iterations_per_epoch())
            .map(|it| {
                (0..n)
                    .map(|d| {
                        let start = (it * n + d) * self.batch;
                        order[start..start + self.batch].to_vec()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn sample_roots(
        &self,
        epoch: usize,
        iteration: usize,
        roots: &[VertexId],
    ) -> Result<HashMap<VertexId, Micrograph>> {
        let one = |&r: &VertexId| {
            let key = self.sampler.key(epoch as u64, iteration as u64, r);
            sample_micrograph(&self.graph, r, &self.sampler, key).map(|m| (r, m))
        };
        if self.parallel {
            roots.par_iter().map(one).collect()
        } else {
            roots.iter().map(one).collect()
        }
    }

    /// Key for the merge redistribution of one iteration.
    pub fn merge_key(&self, epoch: usize, iteration: usize) -> u64 {
        mix_all(self.batch_seed, &[0x3e29e, epoch as u64, iteration as u64])
    }

    /// The trace table one iteration trains with under a merge pattern.
    pub fn iteration_table(
        &self,
        epoch: usize,
        iteration: usize,
        plan: &MiniBatchPlan,
        pattern: &[usize],
    ) -> Result<TraceTable> {
        TraceTable::from_plan(plan).apply_pattern(pattern, self.merge_key(epoch, iteration))
    }

    /// Column sums of the whole epoch under `pattern`; what the merge
    /// controller ranks columns by.
    pub fn epoch_column_sums(&self, epoch: usize, pattern: &[usize]) -> Result<Vec<usize>> {
        let n_cols = self.n_servers() - pattern.len();
        let mut sums = vec![0; n_cols];
        for (it, batches) in self.epoch_batches(epoch).iter().enumerate() {
            let plan = redistribute_roots(batches, &self.partition);
            let tt = self.iteration_table(epoch, it, &plan, pattern)?;
            for (s, c) in sums.iter_mut().zip(tt.column_sums()) {
                *s += c;
            }
        }
        Ok(sums)
    }
}

/// Per-step ledgers and loads of one iteration.
struct StepBook {
    n_servers: usize,
    ledgers: Vec<CommLedger>,
    loads: Vec<Vec<ServerLoad>>,
}

impl StepBook {
    fn new(n_servers: usize, steps: usize) -> Self {
        Self {
            n_servers,
            ledgers: vec![CommLedger::new(); steps],
            loads: vec![vec![ServerLoad::default(); n_servers]; steps],
        }
    }

    fn add_work(&mut self, step: usize, server: ServerId, launches: u64, work: u64) {
        let l = &mut self.loads[step][server as usize];
        l.launches += launches;
        l.work += work;
    }

    /// Closes the iteration: adds the gradient all-reduce and returns the
    /// merged ledger, simulated seconds and per-server busy time.
    fn finish(mut self, cm: &CostModel, param_count: usize) -> (CommLedger, f64, Vec<f64>) {
        let mut busy = vec![0.0; self.n_servers];
        let mut seconds = 0.0;
        let mut total = CommLedger::new();
        for (ledger, loads) in self.ledgers.iter().zip(self.loads.iter_mut()) {
            add_inbound(loads, ledger);
            seconds += simulated_step_time(loads, cm);
            for (b, l) in busy.iter_mut().zip(loads.iter()) {
                *b += l.seconds(cm);
            }
            total.merge(ledger);
        }
        let mut sync = CommLedger::new();
        charge_ring_allreduce(&mut sync, self.n_servers, param_count);
        let mut sync_loads = vec![ServerLoad::default(); self.n_servers];
        add_inbound(&mut sync_loads, &sync);
        seconds += slowest(&sync_loads, cm);
        for (b, l) in busy.iter_mut().zip(&sync_loads) {
            *b += l.seconds(cm);
        }
        total.merge(&sync);
        (total, seconds, busy)
    }
}

fn unique_vertices<'a>(micros: impl IntoIterator<Item = &'a Micrograph>) -> Vec<VertexId> {
    micros
        .into_iter()
        .flat_map(|m| m.vertices().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn work_units(micros: &[&Micrograph], dim: usize) -> u64 {
    micros.iter().map(|m| (m.n_entries() * dim) as u64).sum()
}

/// Outcome of one simulated iteration.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub ledger: CommLedger,
    pub seconds: f64,
    pub steps: usize,
    pub busy: Vec<f64>,
    pub imbalance: f64,
    /// Roots each model trained, in training order.
    pub trained: Vec<Vec<VertexId>>,
    pub batches: Vec<Vec<VertexId>>,
    pub max_staged_bytes: u64,
    pub columns: usize,
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub metrics: EpochMetrics,
    pub iterations: Vec<IterationReport>,
}

impl EpochOutcome {
    /// Whether any model trained a root set different from its original
    /// mini-batch in any iteration.
    pub fn composition_diverged(&self) -> bool {
        self.iterations.iter().any(|it| {
            it.trained.iter().zip(&it.batches).any(|(t, b)| {
                let t: BTreeSet<_> = t.iter().collect();
                let b: BTreeSet<_> = b.iter().collect();
                t != b
            })
        })
    }
}

/// Model replicas and their accumulators; advances through epochs.
pub struct Trainer<'c> {
    cluster: &'c Cluster,
    models: Vec<ModelState>,
    accs: Vec<GradAccumulator>,
}

impl<'c> Trainer<'c> {
    pub fn new(cluster: &'c Cluster) -> Self {
        let n = cluster.n_servers();
        let p = cluster.initial_model.param_count();
        Self {
            cluster,
            models: vec![cluster.initial_model.clone(); n],
            accs: (0..n).map(|d| GradAccumulator::new(d, p)).collect(),
        }
    }

    pub fn cluster(&self) -> &Cluster {
        self.cluster
    }

    pub fn models(&self) -> &[ModelState] {
        &self.models
    }

    /// Trains `cells[d]` on model `d` for every model, accumulating
    /// micrograph gradients in cell order.
    fn train_cells(
        &mut self,
        cells: &[Vec<VertexId>],
        micros: &HashMap<VertexId, Micrograph>,
    ) -> Result<()> {
        let c = self.cluster;
        let models = &self.models;
        let run = |(acc, roots): (&mut GradAccumulator, &Vec<VertexId>)| -> Result<()> {
            let model = &models[acc.model];
            for r in roots {
                let m = &micros[r];
                let fwd = forward(m, |v| Some(c.features.row(v)), model)?;
                let (_, g) = loss_and_backward(m, &fwd, c.labels.label(*r), model);
                accumulate(acc, &g)?;
            }
            Ok(())
        };
        if c.parallel {
            self.accs.par_iter_mut().zip(cells.par_iter()).try_for_each(run)
        } else {
            self.accs.iter_mut().zip(cells.iter()).try_for_each(run)
        }
    }

    fn sync(&mut self, batch_total: usize) -> Result<()> {
        sync_and_update(&mut self.models, &mut self.accs, batch_total, self.cluster.lr).map(|_| ())
    }

    pub fn run_epoch(
        &mut self,
        strategy: Strategy,
        epoch: usize,
        pattern: &[usize],
    ) -> Result<EpochOutcome> {
        let c = self.cluster;
        let mut reports = Vec::new();
        for (it, batches) in c.epoch_batches(epoch).into_iter().enumerate() {
            reports.push(self.run_iteration(strategy, epoch, it, batches, pattern)?);
        }
        let metrics = self.summarize(strategy, epoch, &reports)?;
        Ok(EpochOutcome {
            metrics,
            iterations: reports,
        })
    }

    /// One iteration on explicit mini-batches (`batches[d]` for model `d`).
    pub fn run_iteration(
        &mut self,
        strategy: Strategy,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
        pattern: &[usize],
    ) -> Result<IterationReport> {
        if batches.len() != self.cluster.n_servers() {
            return Err(Error::invalid("need one mini-batch per model"));
        }
        let mut seen = BTreeSet::new();
        for &v in batches.iter().flatten() {
            if v as usize >= self.cluster.graph.n_vertices() || !seen.insert(v) {
                return Err(Error::invalid(format!("bad or repeated root {v}")));
            }
        }
        match strategy {
            Strategy::ModelCentric => self.model_centric_iteration(epoch, it, batches),
            Strategy::LocalityOptimized => self.locality_optimized_iteration(epoch, it, batches),
            Strategy::Naive => self.naive_iteration(epoch, it, batches),
            Strategy::HopGnn { pregather, .. } => self.hopgnn_iteration(epoch, it, batches, pregather, pattern),
        }
    }

    fn summarize(
        &self,
        strategy: Strategy,
        epoch: usize,
        reports: &[IterationReport],
    ) -> Result<EpochMetrics> {
        let n = self.cluster.n_servers();
        let mut ledger = CommLedger::new();
        let mut busy = vec![0.0; n];
        let (mut seconds, mut steps, mut imbalance) = (0.0, 0, 0.0);
        for r in reports {
            ledger.merge(&r.ledger);
            seconds += r.seconds;
            steps += r.steps;
            imbalance += r.imbalance;
            for (b, x) in busy.iter_mut().zip(&r.busy) {
                *b += x;
            }
        }
        let iterations = reports.len();
        let per_iter = |x: f64| if iterations == 0 { 0.0 } else { x / iterations as f64 };
        let alpha = alpha(
            per_iter(ledger.category_bytes(Category::Feature) as f64),
            self.cluster.initial_model.param_bytes(),
        )?;
        Ok(EpochMetrics {
            epoch,
            strategy: strategy.label().to_string(),
            iterations,
            sim_seconds: seconds,
            steps,
            miss_rate: ledger.miss_rate(),
            ledger,
            busy,
            alpha,
            imbalance: per_iter(imbalance),
            max_staged_bytes: reports.iter().map(|r| r.max_staged_bytes).max().unwrap_or(0),
            columns: reports.iter().map(|r| r.columns).max().unwrap_or(0),
        })
    }

    /// Shared tail of the single-step strategies: model `d` trains `cells[d]`
    /// at server `d`, fetching every non-local row once.
    fn stationary_iteration(
        &mut self,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
        cells: Vec<Vec<VertexId>>,
        plan: &MiniBatchPlan,
    ) -> Result<IterationReport> {
        let c = self.cluster;
        let n = c.n_servers();
        let all: Vec<VertexId> = batches.iter().flatten().copied().collect();
        let micros = c.sample_roots(epoch, it, &all)?;
        let mut book = StepBook::new(n, 1);
        for (d, roots) in cells.iter().enumerate() {
            let ms: Vec<&Micrograph> = roots.iter().map(|r| &micros[r]).collect();
            let ids = unique_vertices(ms.iter().copied());
            charge_fetch(d as ServerId, &ids, &c.partition, c.features.dim(), &mut book.ledgers[0]);
            book.add_work(0, d as ServerId, u64::from(!roots.is_empty()), work_units(&ms, c.features.dim()));
        }
        self.train_cells(&cells, &micros)?;
        self.sync(all.len())?;
        let (ledger, seconds, busy) = book.finish(&c.cost, c.initial_model.param_count());
        Ok(IterationReport {
            ledger,
            seconds,
            steps: 1,
            busy,
            imbalance: load_imbalance(plan),
            trained: cells,
            batches,
            max_staged_bytes: 0,
            columns: 1,
        })
    }

    fn model_centric_iteration(
        &mut self,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
    ) -> Result<IterationReport> {
        let plan = redistribute_roots(&batches, &self.cluster.partition);
        let cells = batches.clone();
        self.stationary_iteration(epoch, it, batches, cells, &plan)
    }

    fn locality_optimized_iteration(
        &mut self,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
    ) -> Result<IterationReport> {
        let plan = redistribute_roots(&batches, &self.cluster.partition);
        let n = self.cluster.n_servers();
        let cells = (0..n)
            .map(|s| plan.groups.iter().flat_map(|g| g[s].iter().copied()).collect())
            .collect();
        self.stationary_iteration(epoch, it, batches, cells, &plan)
    }

    fn hopgnn_iteration(
        &mut self,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
        pregather: bool,
        pattern: &[usize],
    ) -> Result<IterationReport> {
        let c = self.cluster;
        let n = c.n_servers();
        let dim = c.features.dim();
        let plan = redistribute_roots(&batches, &c.partition);
        let tt = c.iteration_table(epoch, it, &plan, pattern)?;
        tt.check_bijection()?;
        let all: Vec<VertexId> = batches.iter().flatten().copied().collect();
        let micros = c.sample_roots(epoch, it, &all)?;
        let n_cols = tt.n_columns();
        let mut book = StepBook::new(n, n_cols);

        let mut max_staged = 0;
        if pregather {
            for s in 0..n as ServerId {
                let mut ms: Vec<&Micrograph> = Vec::new();
                for col in 0..n_cols {
                    for d in (0..n).filter(|&d| tt.server(d, col) == s) {
                        ms.extend(tt.cell(d, col).iter().map(|r| &micros[r]));
                    }
                }
                let pplan = plan_pregather(s, ms.iter().copied(), &c.partition);
                let staged = execute_pregather(&pplan, &c.features, &mut book.ledgers[0]);
                max_staged = max_staged.max(staged.bytes);
            }
        }

        let param_bytes = c.initial_model.param_bytes();
        let mut trained = vec![Vec::new(); n];
        for col in 0..n_cols {
            if col > 0 {
                for d in 0..n {
                    let (from, to) = (tt.server(d, col - 1), tt.server(d, col));
                    book.ledgers[col].record(from, to, Category::Model, param_bytes);
                    book.ledgers[col].record(from, to, Category::Gradient, param_bytes);
                }
            }
            let mut cells = Vec::with_capacity(n);
            for d in 0..n {
                let s = tt.server(d, col);
                let roots = tt.cell(d, col).to_vec();
                if !roots.is_empty() {
                    let ms: Vec<&Micrograph> = roots.iter().map(|r| &micros[r]).collect();
                    let ids = unique_vertices(ms.iter().copied());
                    if pregather {
                        let remote = ids.iter().filter(|&&v| c.partition.home(v) != s).count() as u64;
                        book.ledgers[col].record_hits(s, ids.len() as u64 - remote, remote);
                    } else {
                        charge_fetch(s, &ids, &c.partition, dim, &mut book.ledgers[col]);
                    }
                    book.add_work(col, s, 1, work_units(&ms, dim));
                }
                trained[d].extend_from_slice(&roots);
                cells.push(roots);
            }
            self.train_cells(&cells, &micros)?;
        }
        self.sync(all.len())?;
        let (ledger, seconds, busy) = book.finish(&c.cost, c.initial_model.param_count());
        Ok(IterationReport {
            ledger,
            seconds,
            steps: n_cols,
            busy,
            imbalance: load_imbalance(&plan),
            trained,
            batches,
            max_staged_bytes: max_staged,
            columns: n_cols,
        })
    }

    fn naive_iteration(
        &mut self,
        epoch: usize,
        it: usize,
        batches: Vec<Vec<VertexId>>,
    ) -> Result<IterationReport> {
        let c = self.cluster;
        let n = c.n_servers();
        let dim = c.features.dim();
        let plan = redistribute_roots(&batches, &c.partition);
        let all: Vec<VertexId> = batches.iter().flatten().copied().collect();
        let micros = c.sample_roots(epoch, it, &all)?;
        let n_steps = if n == 1 { 1 } else { n + 1 };
        let mut book = StepBook::new(n, n_steps);
        let param_bytes = c.initial_model.param_bytes();
        let out_dims: Vec<usize> = c.initial_model.layers.iter().map(|l| l.out_dim).collect();

        for (d, roots) in batches.iter().enumerate() {
            let mut stops = vec![d as ServerId];
            if n > 1 {
                stops.extend((0..n as ServerId).filter(|&s| s != d as ServerId));
                stops.push(d as ServerId);
            }
            let mut progress: Vec<NaiveProgress> =
                roots.iter().map(|r| NaiveProgress::new(&micros[r])).collect();
            for (step, &s) in stops.iter().enumerate() {
                if step > 0 {
                    let from = stops[step - 1];
                    let state_rows: u64 = progress.iter().map(|p| p.state_bytes(&out_dims)).sum();
                    let edges: u64 = progress.iter().map(|p| p.remaining_pairs()).sum();
                    let ledger = &mut book.ledgers[step];
                    ledger.record(from, s, Category::Model, param_bytes);
                    if state_rows > 0 {
                        ledger.record(from, s, Category::Intermediate, state_rows);
                    }
                    if edges > 0 {
                        ledger.record(from, s, Category::Topology, edges * TOPOLOGY_BYTES_PER_EDGE);
                    }
                }
                let mut read: BTreeSet<VertexId> = BTreeSet::new();
                let mut fresh = 0u64;
                for p in &mut progress {
                    fresh += p.visit(s, &c.partition, &mut read);
                }
                book.ledgers[step].record_hits(s, read.len() as u64, 0);
                let last = step + 1 == stops.len();
                if fresh > 0 || last {
                    book.add_work(step, s, 1, fresh * dim as u64);
                }
            }
        }

        self.train_cells(&batches, &micros)?;
        self.sync(all.len())?;
        let (ledger, seconds, busy) = book.finish(&c.cost, c.initial_model.param_count());
        Ok(IterationReport {
            ledger,
            seconds,
            steps: n_steps,
            busy,
            imbalance: load_imbalance(&plan),
            trained: batches.clone(),
            batches,
            max_staged_bytes: 0,
            columns: 1,
        })
    }
}

/// Forward-pass progress of one micrograph under the naive strategy. A layer-0
/// row completes when the model visits its home; a higher-layer row completes
/// once its self row and all its sources are complete. Rows with some but not
/// all inputs complete hold a partial aggregation.
struct NaiveProgress<'m> {
    m: &'m Micrograph,
    sources: Vec<Vec<Vec<u32>>>,
    done: Vec<Vec<bool>>,
}

impl<'m> NaiveProgress<'m> {
    fn new(m: &'m Micrograph) -> Self {
        let sources = (1..=m.n_layers()).map(|k| m.sources(k)).collect();
        let done = m.layers.iter().map(|l| vec![false; l.len()]).collect();
        Self { m, sources, done }
    }

    /// Reads local rows and propagates; returns newly completed rows.
    fn visit(&mut self, s: ServerId, p: &PartitionMap, read: &mut BTreeSet<VertexId>) -> u64 {
        let mut fresh = 0;
        for (i, &v) in self.m.layers[0].iter().enumerate() {
            if !self.done[0][i] && p.home(v) == s {
                self.done[0][i] = true;
                read.insert(v);
                fresh += 1;
            }
        }
        for k in 1..self.done.len() {
            for i in 0..self.done[k].len() {
                if self.done[k][i] {
                    continue;
                }
                let prev = &self.done[k - 1];
                if prev[i] && self.sources[k - 1][i].iter().all(|&src| prev[src as usize]) {
                    self.done[k][i] = true;
                    fresh += 1;
                }
            }
        }
        fresh
    }

    /// Bytes of partial aggregations plus stored activations, `out_dim` wide
    /// per row of each layer.
    fn state_bytes(&self, out_dims: &[usize]) -> u64 {
        let mut bytes = 0;
        for k in 1..self.done.len() {
            let prev = &self.done[k - 1];
            let width = out_dims[k - 1] as u64 * ELEM_BYTES;
            for i in 0..self.done[k].len() {
                let started = prev[i] || self.sources[k - 1][i].iter().any(|&s| prev[s as usize]);
                if self.done[k][i] || started {
                    bytes += width;
                }
            }
        }
        bytes
    }

    /// Aggregation edges whose dst is still incomplete.
    fn remaining_pairs(&self) -> u64 {
        (1..self.done.len())
            .map(|k| {
                self.sources[k - 1]
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| !self.done[k][i])
                    .map(|(_, srcs)| srcs.len() as u64)
                    .sum::<u64>()
            })
            .sum()
    }
}
