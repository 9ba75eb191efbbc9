//! Whole-run behavior: FIFO discipline, exact pair conservation, and
//! the overhead lower bound on a production-sized scenario.

use bellswap::inventory::CostTable;
use bellswap::sim::{run, FulfillMode, ScenarioConfig, TopologySpec};

fn cycle_config(nodes: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologySpec::Cycle { nodes },
        costs: CostTable::default(),
        consumer_count: 10,
        request_count: 40,
        mode: FulfillMode::Oblivious,
        swap_attempts_per_node_per_tick: 1,
        max_ticks: 50_000,
        seed,
    }
}

#[test]
fn satisfaction_ticks_are_fifo_ordered() {
    for seed in [1, 2, 3] {
        let metrics = run(&cycle_config(9, seed)).unwrap();
        assert!(metrics.completed);
        let ticks = &metrics.latencies;
        assert_eq!(ticks.len(), metrics.consumptions_satisfied);
        assert!(
            ticks.windows(2).all(|w| w[0] <= w[1]),
            "satisfaction ticks must be nondecreasing: {ticks:?}"
        );
    }
}

/// generated + swap products = consumption drains + swap drains + residual,
/// exactly, over full runs in every mode.
#[test]
fn pair_conservation_is_exact() {
    let mut configs = Vec::new();
    for seed in [1, 9, 77] {
        configs.push(cycle_config(9, seed));
    }
    let mut with_costs = cycle_config(9, 5);
    with_costs.costs = CostTable::uniform_distill(2)
        .unwrap()
        .with_survival_default(0.7)
        .unwrap()
        .with_qec_overhead(1.5)
        .unwrap();
    with_costs.max_ticks = 3_000; // may not complete; identity must hold anyway
    configs.push(with_costs);
    let mut hybrid = cycle_config(9, 6);
    hybrid.mode = FulfillMode::Hybrid;
    configs.push(hybrid);
    let mut grid = cycle_config(9, 8);
    grid.topology = TopologySpec::Grid { side: 4, seed: 8 };
    configs.push(grid);

    for config in configs {
        let metrics = run(&config).unwrap();
        assert_eq!(
            metrics.generated_pairs + metrics.swaps_performed,
            metrics.consumption_drained + metrics.swap_drained + metrics.residual_total_pairs,
            "conservation violated for config {config:?}"
        );
    }
}

#[test]
fn production_sized_cycle_run_has_overhead_of_at_least_one() {
    let config = ScenarioConfig {
        topology: TopologySpec::Cycle { nodes: 25 },
        costs: CostTable::default(),
        consumer_count: 35,
        request_count: 200,
        mode: FulfillMode::Oblivious,
        swap_attempts_per_node_per_tick: 1,
        max_ticks: 100_000,
        seed: 424_242,
    };
    let metrics = run(&config).unwrap();
    assert!(metrics.completed, "budget exhausted: {metrics:?}");
    assert!(metrics.baseline_denominator > 0);
    let overhead = metrics.swap_overhead.unwrap();
    assert!(overhead >= 1.0, "overhead {overhead} below 1");
}
