//! Deterministic discrete-event simulation of path-oblivious Bell-pair
//! distribution.
//!
//! Each tick runs three phases in fixed order: (1) every generation
//! edge deposits one pair with probability `g * survival / qec`
//! (clamped to [0,1]); (2) the request queue head consumes while its
//! pair is stocked, strictly in sequence order; (3) nodes, in a fresh
//! seeded shuffle, each execute up to a configured number of selected
//! balancing swaps. In hybrid mode a blocked head request attempts one
//! on-demand fulfillment between phases 2 and 3. A run stops when the
//! last request is satisfied or the tick budget is exhausted; all
//! randomness comes from one seeded generator, so identical configs
//! replay identically.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balancer::select_swap;
use crate::ids::{NodeId, PairKey};
use crate::inventory::{CostTable, InventoryError, LedgerOp, OpLog, PairInventory};
use crate::planner::{
    hybrid_fulfill, nested_swap_cost, HybridError, NestedCostParams, PlannerError,
};
use crate::topology::{
    build_cycle, build_torus_grid, is_connected, shortest_path_len, GenerationGraph, TopologyError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
}

/// Topology description as it appears in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Cycle {
        nodes: usize,
    },
    Grid {
        side: usize,
        seed: u64,
    },
    Edges {
        nodes: usize,
        edges: Vec<(usize, usize, f64)>,
    },
}

impl TopologySpec {
    pub fn build(&self) -> Result<GenerationGraph, TopologyError> {
        match *self {
            TopologySpec::Cycle { nodes } => build_cycle(nodes),
            TopologySpec::Grid { side, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                build_torus_grid(side, &mut rng)
            }
            TopologySpec::Edges { nodes, ref edges } => {
                let mut graph = GenerationGraph::new(nodes);
                for &(a, b, rate) in edges {
                    graph.add_edge(NodeId(a), NodeId(b), rate)?;
                }
                Ok(graph)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TopologySpec::Cycle { .. } => "cycle",
            TopologySpec::Grid { .. } => "grid",
            TopologySpec::Edges { .. } => "edges",
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Cycle { nodes } => nodes,
            TopologySpec::Grid { side, .. } => side * side,
            TopologySpec::Edges { nodes, .. } => nodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FulfillMode {
    #[default]
    Oblivious,
    Hybrid,
}

impl std::fmt::Display for FulfillMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FulfillMode::Oblivious => "oblivious",
            FulfillMode::Hybrid => "hybrid",
        })
    }
}

fn default_consumer_count() -> usize {
    35
}

fn default_request_count() -> usize {
    200
}

fn default_swap_attempts() -> u32 {
    1
}

fn default_max_ticks() -> u64 {
    100_000
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologySpec,
    #[serde(default)]
    pub costs: CostTable,
    #[serde(default = "default_consumer_count")]
    pub consumer_count: usize,
    #[serde(default = "default_request_count")]
    pub request_count: usize,
    #[serde(default)]
    pub mode: FulfillMode,
    #[serde(default = "default_swap_attempts")]
    pub swap_attempts_per_node_per_tick: u32,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json_str(json: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig =
            serde_json::from_str(json).map_err(|e| SimError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let nodes = self.topology.node_count();
        let pair_count = nodes * nodes.saturating_sub(1) / 2;
        if self.consumer_count == 0 {
            return Err(SimError::Config(
                "consumer_count: must be at least 1".into(),
            ));
        }
        if self.consumer_count > pair_count {
            return Err(SimError::Config(format!(
                "consumer_count: {} exceeds the {} possible pairs of {} nodes",
                self.consumer_count, pair_count, nodes
            )));
        }
        if self.request_count == 0 {
            return Err(SimError::Config("request_count: must be at least 1".into()));
        }
        if self.swap_attempts_per_node_per_tick == 0 {
            return Err(SimError::Config(
                "swap_attempts_per_node_per_tick: must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draws `k` distinct unordered pairs uniformly without replacement.
pub fn draw_consumers(
    rng: &mut impl Rng,
    node_count: usize,
    k: usize,
) -> Result<Vec<PairKey>, SimError> {
    let mut pool: Vec<PairKey> = (0..node_count)
        .flat_map(|lo| {
            ((lo + 1)..node_count)
                .map(move |hi| PairKey::new(NodeId(lo), NodeId(hi)).expect("lo < hi"))
        })
        .collect();
    if k > pool.len() {
        return Err(SimError::Config(format!(
            "consumer_count: {k} exceeds the {} possible pairs of {node_count} nodes",
            pool.len()
        )));
    }
    // Partial Fisher-Yates: the first k slots end up a uniform sample.
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Request sequence: independent uniform draws from the consumer set.
pub fn build_request_sequence(
    rng: &mut impl Rng,
    consumers: &[PairKey],
    request_count: usize,
) -> Result<Vec<PairKey>, SimError> {
    if consumers.is_empty() {
        return Err(SimError::Config(
            "consumer_count: consumer set is empty".into(),
        ));
    }
    Ok((0..request_count)
        .map(|_| consumers[rng.gen_range(0..consumers.len())])
        .collect())
}

/// FIFO consumption requests; the head is never skipped.
#[derive(Debug, Clone)]
pub struct RequestQueue {
    requests: Vec<PairKey>,
    next: usize,
    satisfied_ticks: Vec<u64>,
}

impl RequestQueue {
    pub fn new(requests: Vec<PairKey>) -> Self {
        RequestQueue {
            requests,
            next: 0,
            satisfied_ticks: Vec::new(),
        }
    }

    pub fn head(&self) -> Option<PairKey> {
        self.requests.get(self.next).copied()
    }

    pub fn mark_satisfied(&mut self, tick: u64) {
        debug_assert!(self.next < self.requests.len());
        self.satisfied_ticks.push(tick);
        self.next += 1;
    }

    pub fn is_done(&self) -> bool {
        self.next >= self.requests.len()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn satisfied_count(&self) -> usize {
        self.next
    }

    /// The satisfied prefix of the request sequence.
    pub fn satisfied_pairs(&self) -> &[PairKey] {
        &self.requests[..self.next]
    }

    pub fn satisfied_ticks(&self) -> &[u64] {
        &self.satisfied_ticks
    }
}

/// Counters and derived measures for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub swaps_performed: u64,
    pub consumptions_satisfied: usize,
    /// Sum of nested-swapping costs over satisfied events.
    pub baseline_denominator: u64,
    /// `swaps_performed / baseline_denominator`; undefined when the
    /// denominator is zero.
    pub swap_overhead: Option<f64>,
    pub residual_total_pairs: u64,
    pub ticks_elapsed: u64,
    /// Satisfaction tick of each satisfied request, in sequence order.
    pub latencies: Vec<u64>,
    /// All requests satisfied within the tick budget.
    pub completed: bool,
    pub generated_pairs: u64,
    pub consumption_drained: u64,
    pub swap_drained: u64,
}

pub fn metrics_csv_header() -> &'static str {
    "topology,nodes,distill,seed,mode,requests,satisfied,swaps,denominator,overhead,ticks,residual_pairs"
}

pub fn metrics_csv_row(config: &ScenarioConfig, metrics: &SimMetrics) -> String {
    let overhead = match metrics.swap_overhead {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        config.topology.kind_name(),
        config.topology.node_count(),
        config.costs.distill_default(),
        config.seed,
        config.mode,
        config.request_count,
        metrics.consumptions_satisfied,
        metrics.swaps_performed,
        metrics.baseline_denominator,
        overhead,
        metrics.ticks_elapsed,
        metrics.residual_total_pairs,
    )
}

/// One scenario's state: ledger, request queue, and seeded randomness.
pub struct Simulation {
    graph: GenerationGraph,
    costs: CostTable,
    inventory: PairInventory,
    queue: RequestQueue,
    rng: ChaCha8Rng,
    mode: FulfillMode,
    swap_attempts: u32,
    tick: u64,
    node_order: Vec<NodeId>,
    deposit_prob: Vec<(PairKey, f64)>,
    /// Nested-swapping price of each distinct request pair.
    event_price: BTreeMap<PairKey, u64>,
    denominator: u64,
    swaps_performed: u64,
    generated_pairs: u64,
    consumption_drained: u64,
    swap_drained: u64,
    log: Option<OpLog>,
}

impl Simulation {
    /// Direct construction from parts; `requests` pairs must be
    /// connected in `graph`.
    pub fn new(
        graph: GenerationGraph,
        costs: CostTable,
        requests: Vec<PairKey>,
        mode: FulfillMode,
        swap_attempts: u32,
        seed: u64,
    ) -> Result<Self, SimError> {
        Self::with_rng(
            graph,
            costs,
            requests,
            mode,
            swap_attempts,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    fn with_rng(
        graph: GenerationGraph,
        costs: CostTable,
        requests: Vec<PairKey>,
        mode: FulfillMode,
        swap_attempts: u32,
        rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        if !is_connected(&graph) {
            return Err(SimError::Config(
                "topology: generation graph is not connected".into(),
            ));
        }
        let params = NestedCostParams::new(costs.distill_default())?;
        let mut event_price = BTreeMap::new();
        for &pair in &requests {
            if let std::collections::btree_map::Entry::Vacant(slot) = event_price.entry(pair) {
                let hops = shortest_path_len(&graph, pair.lo(), pair.hi())?;
                slot.insert(nested_swap_cost(hops, params)?);
            }
        }
        let deposit_prob = graph
            .edges()
            .map(|(pair, rate)| {
                let p = (rate * costs.survival(pair) / costs.qec_overhead()).clamp(0.0, 1.0);
                (pair, p)
            })
            .collect();
        let node_count = graph.node_count();
        Ok(Simulation {
            inventory: PairInventory::new(node_count),
            queue: RequestQueue::new(requests),
            node_order: (0..node_count).map(NodeId).collect(),
            graph,
            costs,
            rng,
            mode,
            swap_attempts,
            tick: 0,
            deposit_prob,
            event_price,
            denominator: 0,
            swaps_performed: 0,
            generated_pairs: 0,
            consumption_drained: 0,
            swap_drained: 0,
            log: None,
        })
    }

    /// Builds the whole scenario: topology, consumer draw, request
    /// sequence, and engine, all from one seeded stream.
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let graph = config.topology.build()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let consumers = draw_consumers(&mut rng, graph.node_count(), config.consumer_count)?;
        let requests = build_request_sequence(&mut rng, &consumers, config.request_count)?;
        Self::with_rng(
            graph,
            config.costs.clone(),
            requests,
            config.mode,
            config.swap_attempts_per_node_per_tick,
            rng,
        )
    }

    pub fn set_logging(&mut self, enabled: bool) {
        self.log = enabled.then(OpLog::new);
    }

    pub fn log(&self) -> Option<&OpLog> {
        self.log.as_ref()
    }

    pub fn inventory(&self) -> &PairInventory {
        &self.inventory
    }

    pub fn queue(&self) -> &RequestQueue {
        &self.queue
    }

    pub fn is_done(&self) -> bool {
        self.queue.is_done()
    }

    pub fn ticks_elapsed(&self) -> u64 {
        self.tick
    }

    /// Advances one tick (generation, consumption, optional hybrid
    /// fulfillment, balancing swaps).
    pub fn step(&mut self) {
        self.tick += 1;
        self.generation_phase();
        self.consumption_phase();
        if self.queue.is_done() {
            return;
        }
        if self.mode == FulfillMode::Hybrid {
            self.hybrid_phase();
        }
        self.swap_phase();
    }

    fn generation_phase(&mut self) {
        for i in 0..self.deposit_prob.len() {
            let (pair, p) = self.deposit_prob[i];
            if p > 0.0 && self.rng.gen_bool(p) {
                self.inventory
                    .add_pairs_key(pair, 1)
                    .expect("edge pairs are valid");
                self.generated_pairs += 1;
                if let Some(log) = &mut self.log {
                    log.push(LedgerOp::Generate {
                        tick: self.tick,
                        pair,
                        amount: 1,
                    });
                }
            }
        }
    }

    fn consumption_phase(&mut self) {
        while let Some(head) = self.queue.head() {
            if self.inventory.count_key(head) < self.costs.distill(head) {
                break;
            }
            let drained = self
                .inventory
                .consume(head.lo(), head.hi(), &self.costs)
                .expect("count checked above");
            self.consumption_drained += drained;
            self.denominator += self.event_price[&head];
            self.queue.mark_satisfied(self.tick);
            if let Some(log) = &mut self.log {
                log.push(LedgerOp::Consume {
                    tick: self.tick,
                    pair: head,
                    drained,
                });
            }
        }
    }

    fn hybrid_phase(&mut self) {
        let head = match self.queue.head() {
            Some(head) => head,
            None => return,
        };
        if self.inventory.count_key(head) >= self.costs.distill(head) {
            return;
        }
        let outcome = hybrid_fulfill(&mut self.inventory, &self.costs, head.lo(), head.hi());
        let executed = match outcome {
            Ok(swaps) => swaps,
            Err(HybridError::PartialExecution { executed, .. }) => executed,
            Err(HybridError::PathNotFound { .. }) => return,
        };
        for swap in executed {
            let left = PairKey::new(swap.swapper, swap.a).expect("distinct");
            let right = PairKey::new(swap.swapper, swap.b).expect("distinct");
            let (dl, dr) = (self.costs.distill(left), self.costs.distill(right));
            self.swaps_performed += 1;
            self.swap_drained += dl + dr;
            if let Some(log) = &mut self.log {
                log.push(LedgerOp::Swap {
                    tick: self.tick,
                    swapper: swap.swapper,
                    a: swap.a,
                    b: swap.b,
                    drain_left: dl,
                    drain_right: dr,
                });
            }
        }
    }

    fn swap_phase(&mut self) {
        for i in (1..self.node_order.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            self.node_order.swap(i, j);
        }
        for idx in 0..self.node_order.len() {
            let node = self.node_order[idx];
            for _ in 0..self.swap_attempts {
                let candidate = match select_swap(&self.inventory, &self.costs, node) {
                    Some(c) => c,
                    None => break,
                };
                let drain = self
                    .inventory
                    .apply_swap(
                        candidate.swapper,
                        candidate.left,
                        candidate.right,
                        &self.costs,
                    )
                    .expect("selected swaps satisfy the swap preconditions");
                self.swaps_performed += 1;
                self.swap_drained += drain.total();
                if let Some(log) = &mut self.log {
                    log.push(LedgerOp::Swap {
                        tick: self.tick,
                        swapper: candidate.swapper,
                        a: candidate.left,
                        b: candidate.right,
                        drain_left: drain.left,
                        drain_right: drain.right,
                    });
                }
            }
        }
    }

    /// Steps until every request is satisfied or `max_ticks` is hit.
    pub fn run(&mut self, max_ticks: u64) -> SimMetrics {
        while !self.queue.is_done() && self.tick < max_ticks {
            self.step();
        }
        self.metrics()
    }

    pub fn metrics(&self) -> SimMetrics {
        let residual = self.inventory.total();
        debug_assert_eq!(
            self.generated_pairs + self.swaps_performed,
            self.consumption_drained + self.swap_drained + residual,
            "pair conservation identity violated"
        );
        SimMetrics {
            swaps_performed: self.swaps_performed,
            consumptions_satisfied: self.queue.satisfied_count(),
            baseline_denominator: self.denominator,
            swap_overhead: (self.denominator > 0)
                .then(|| self.swaps_performed as f64 / self.denominator as f64),
            residual_total_pairs: residual,
            ticks_elapsed: self.tick,
            latencies: self.queue.satisfied_ticks().to_vec(),
            completed: self.queue.is_done(),
            generated_pairs: self.generated_pairs,
            consumption_drained: self.consumption_drained,
            swap_drained: self.swap_drained,
        }
    }

    pub fn graph(&self) -> &GenerationGraph {
        &self.graph
    }
}

/// Runs a scenario from its config and returns the final metrics.
pub fn run(config: &ScenarioConfig) -> Result<SimMetrics, SimError> {
    let mut sim = Simulation::from_config(config)?;
    Ok(sim.run(config.max_ticks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: usize, b: usize) -> PairKey {
        PairKey::new(NodeId(a), NodeId(b)).unwrap()
    }

    fn two_node_config() -> ScenarioConfig {
        ScenarioConfig {
            topology: TopologySpec::Edges {
                nodes: 2,
                edges: vec![(0, 1, 1.0)],
            },
            costs: CostTable::default(),
            consumer_count: 1,
            request_count: 1,
            mode: FulfillMode::Oblivious,
            swap_attempts_per_node_per_tick: 1,
            max_ticks: 100,
            seed: 7,
        }
    }

    #[test]
    fn draw_consumers_exhaustive_when_k_equals_pair_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let consumers = draw_consumers(&mut rng, 3, 3).unwrap();
        assert_eq!(consumers, vec![pair(0, 1), pair(0, 2), pair(1, 2)]);
    }

    #[test]
    fn draw_consumers_is_deterministic_per_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            draw_consumers(&mut rng, 25, 35).unwrap()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn draw_consumers_rejects_oversized_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // C(25,2) = 300.
        assert!(draw_consumers(&mut rng, 25, 300).is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            draw_consumers(&mut rng, 25, 301),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn request_sequence_from_single_consumer_repeats_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = build_request_sequence(&mut rng, &[pair(0, 1)], 5).unwrap();
        assert_eq!(seq, vec![pair(0, 1); 5]);
    }

    #[test]
    fn request_sequence_rejects_empty_consumers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            build_request_sequence(&mut rng, &[], 5),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn request_sequence_draws_are_uniform_within_five_sigma() {
        let consumers: Vec<PairKey> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            draw_consumers(&mut rng, 25, 35).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 10_000usize;
        let seq = build_request_sequence(&mut rng, &consumers, draws).unwrap();
        let mut counts: BTreeMap<PairKey, usize> = BTreeMap::new();
        for pair in seq {
            *counts.entry(pair).or_insert(0) += 1;
        }
        let p = 1.0 / consumers.len() as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &consumer in &consumers {
            let count = counts.get(&consumer).copied().unwrap_or(0) as f64;
            assert!(
                (count - mean).abs() <= 5.0 * sigma,
                "{consumer} drawn {count} times, expected {mean:.1} +/- {:.1}",
                5.0 * sigma
            );
        }
    }

    #[test]
    fn adjacent_request_satisfied_first_tick_without_swaps() {
        let metrics = run(&two_node_config()).unwrap();
        assert!(metrics.completed);
        assert_eq!(metrics.consumptions_satisfied, 1);
        assert_eq!(metrics.swaps_performed, 0);
        assert_eq!(metrics.latencies, vec![1]);
        assert_eq!(metrics.baseline_denominator, 0);
        assert_eq!(metrics.swap_overhead, None);
    }

    #[test]
    fn relay_request_needs_a_swap() {
        let mut graph = GenerationGraph::new(3);
        graph.add_edge(NodeId(0), NodeId(1), 1.0).unwrap();
        graph.add_edge(NodeId(1), NodeId(2), 1.0).unwrap();
        let mut sim = Simulation::new(
            graph,
            CostTable::default(),
            vec![pair(0, 2)],
            FulfillMode::Oblivious,
            1,
            5,
        )
        .unwrap();
        let metrics = sim.run(100);
        assert!(metrics.completed);
        assert!(metrics.swaps_performed >= 1);
        assert_eq!(metrics.baseline_denominator, 1);
    }

    #[test]
    fn identical_configs_replay_identically() {
        let config = ScenarioConfig {
            topology: TopologySpec::Cycle { nodes: 9 },
            costs: CostTable::default(),
            consumer_count: 10,
            request_count: 30,
            mode: FulfillMode::Oblivious,
            swap_attempts_per_node_per_tick: 1,
            max_ticks: 10_000,
            seed: 42,
        };
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_tick_budget_satisfies_nothing() {
        let mut config = two_node_config();
        config.max_ticks = 0;
        let metrics = run(&config).unwrap();
        assert_eq!(metrics.consumptions_satisfied, 0);
        assert_eq!(metrics.ticks_elapsed, 0);
        assert!(!metrics.completed);
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let mut config = two_node_config();
        config.consumer_count = 2; // C(2,2) = 1
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("consumer_count"));
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let json = r#"{
            "topology": {"kind": "cycle", "nodes": 25},
            "seed": 3
        }"#;
        let config = ScenarioConfig::from_json_str(json).unwrap();
        assert_eq!(config.consumer_count, 35);
        assert_eq!(config.request_count, 200);
        assert_eq!(config.mode, FulfillMode::Oblivious);
        assert_eq!(config.swap_attempts_per_node_per_tick, 1);
        assert_eq!(config.max_ticks, 100_000);
        let back: ScenarioConfig =
            serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn config_parse_error_is_reported() {
        assert!(matches!(
            ScenarioConfig::from_json_str("{\"topology\""),
            Err(SimError::Parse(_))
        ));
        // Unknown fields are rejected, naming the field.
        let err = ScenarioConfig::from_json_str(
            r#"{"topology": {"kind": "cycle", "nodes": 5}, "seed": 1, "typo_field": 2}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("typo_field"));
    }

    #[test]
    fn disconnected_edges_topology_is_rejected() {
        let config = ScenarioConfig {
            topology: TopologySpec::Edges {
                nodes: 4,
                edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
            },
            costs: CostTable::default(),
            consumer_count: 1,
            request_count: 1,
            mode: FulfillMode::Oblivious,
            swap_attempts_per_node_per_tick: 1,
            max_ticks: 10,
            seed: 0,
        };
        assert!(matches!(
            Simulation::from_config(&config),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn op_log_replays_to_the_final_inventory() {
        let config = ScenarioConfig {
            topology: TopologySpec::Cycle { nodes: 6 },
            costs: CostTable::default(),
            consumer_count: 5,
            request_count: 10,
            mode: FulfillMode::Oblivious,
            swap_attempts_per_node_per_tick: 1,
            max_ticks: 1_000,
            seed: 8,
        };
        let mut sim = Simulation::from_config(&config).unwrap();
        sim.set_logging(true);
        sim.run(config.max_ticks);
        let log = sim.log().unwrap();
        let mut replayed = PairInventory::new(6);
        log.replay(&mut replayed, &config.costs).unwrap();
        assert_eq!(&replayed, sim.inventory());
    }

    #[test]
    fn hybrid_mode_completes_relay_requests() {
        let mut graph = GenerationGraph::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            graph.add_edge(NodeId(a), NodeId(b), 1.0).unwrap();
        }
        let mut sim = Simulation::new(
            graph,
            CostTable::default(),
            vec![pair(0, 3), pair(0, 3)],
            FulfillMode::Hybrid,
            1,
            21,
        )
        .unwrap();
        let metrics = sim.run(200);
        assert!(metrics.completed);
        assert!(metrics.swaps_performed >= 2);
    }
}
