//! Planned-path baseline accounting and on-demand fulfillment.
//!
//! The nested-swapping recursion prices each satisfied request at the
//! swap count a planned shortest-path approach would spend on it; the
//! sum of those prices is the overhead denominator. `hybrid_fulfill`
//! is the on-demand mode: when a request is blocked it hunts for a
//! shortest path through the *stored pairs* (which can be far shorter
//! than the generation-graph path) and swaps along it.

use std::collections::VecDeque;

use crate::ids::{NodeId, PairKey};
use crate::inventory::{CostTable, InventoryError, PairInventory};
use crate::topology::{shortest_path_len, GenerationGraph, TopologyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error("path length must be at least 1, got {0}")]
    InvalidLength(usize),
    #[error("distillation overhead must be at least 1, got {0}")]
    InvalidDistill(u64),
    #[error("nested swap cost overflows u64 at n={n}, distill={distill}")]
    CostOverflow { n: usize, distill: u64 },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Parameters of the nested-swapping cost recursion: a uniform
/// distillation overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedCostParams {
    distill: u64,
}

impl NestedCostParams {
    pub fn new(distill: u64) -> Result<Self, PlannerError> {
        if distill < 1 {
            return Err(PlannerError::InvalidDistill(distill));
        }
        Ok(NestedCostParams { distill })
    }

    pub fn distill(self) -> u64 {
        self.distill
    }
}

/// Swaps a nested (balanced recursive) plan spends to satisfy one
/// request across an `n`-hop shortest path:
///
/// ```text
/// s(1) = 0,  s(2) = D,  s(n) = D * (s(floor(n/2)) + s(ceil(n/2)))
/// ```
pub fn nested_swap_cost(n: usize, params: NestedCostParams) -> Result<u64, PlannerError> {
    if n < 1 {
        return Err(PlannerError::InvalidLength(n));
    }
    let d = params.distill;
    let mut table = vec![0u64; n + 1];
    for m in 2..=n {
        let value = if m == 2 {
            d
        } else {
            let halves = table[m / 2]
                .checked_add(table[m.div_ceil(2)])
                .ok_or(PlannerError::CostOverflow { n: m, distill: d })?;
            d.checked_mul(halves)
                .ok_or(PlannerError::CostOverflow { n: m, distill: d })?
        };
        table[m] = value;
    }
    Ok(table[n])
}

/// Total nested-swapping price of a list of satisfied consumption
/// events: the sum of `s(hops(x,y))` over events, with adjacent pairs
/// contributing zero.
pub fn baseline_denominator(
    events: &[PairKey],
    graph: &GenerationGraph,
    params: NestedCostParams,
) -> Result<u64, PlannerError> {
    let mut total = 0u64;
    for &pair in events {
        let hops = shortest_path_len(graph, pair.lo(), pair.hi())?;
        total = total.checked_add(nested_swap_cost(hops, params)?).ok_or(
            PlannerError::CostOverflow {
                n: hops,
                distill: params.distill,
            },
        )?;
    }
    Ok(total)
}

/// One swap executed by [`hybrid_fulfill`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecutedSwap {
    pub swapper: NodeId,
    pub a: NodeId,
    pub b: NodeId,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HybridError {
    #[error("no path of stored pairs connects {a} and {b}")]
    PathNotFound { a: NodeId, b: NodeId },
    #[error("swap plan failed after {} executed swaps: {cause}", executed.len())]
    PartialExecution {
        executed: Vec<ExecutedSwap>,
        cause: InventoryError,
    },
}

/// On-demand fulfillment for a blocked request `(x, y)`.
///
/// Finds a breadth-first shortest path from `x` to `y` through the
/// availability graph whose edges are pairs `(u,v)` with
/// `count(u,v) >= distill(u,v)`, then swaps along it in nested
/// (balanced-split, recursive) order. Availability is re-checked at
/// each swap; a mid-plan shortfall keeps the state changes already
/// made, matching the irreversibility of real swaps, and reports the
/// executed prefix.
pub fn hybrid_fulfill(
    inv: &mut PairInventory,
    costs: &CostTable,
    x: NodeId,
    y: NodeId,
) -> Result<Vec<ExecutedSwap>, HybridError> {
    debug_assert!(x != y, "hybrid fulfillment needs distinct endpoints");
    let path =
        availability_path(inv, costs, x, y).ok_or(HybridError::PathNotFound { a: x, b: y })?;
    let mut executed = Vec::new();
    nested_execute(inv, costs, &path, 0, path.len() - 1, &mut executed)?;
    Ok(executed)
}

/// BFS shortest path in the availability graph; `None` when `x` and `y`
/// are not connected by stored pairs.
fn availability_path(
    inv: &PairInventory,
    costs: &CostTable,
    x: NodeId,
    y: NodeId,
) -> Option<Vec<NodeId>> {
    let n = inv.node_count();
    let usable = |a: NodeId, b: NodeId| {
        let key = PairKey::new(a, b).expect("distinct");
        inv.count_key(key) >= costs.distill(key)
    };
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([x]);
    prev[x.index()] = x.index();
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if v == u.index() || prev[v] != usize::MAX || !usable(u, NodeId(v)) {
                continue;
            }
            prev[v] = u.index();
            if v == y.index() {
                let mut path = vec![y];
                let mut cur = v;
                while cur != x.index() {
                    cur = prev[cur];
                    path.push(NodeId(cur));
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(NodeId(v));
        }
    }
    None
}

/// Materializes the pair `(path[lo], path[hi])` by balanced recursion:
/// build each half, then swap at the split point.
fn nested_execute(
    inv: &mut PairInventory,
    costs: &CostTable,
    path: &[NodeId],
    lo: usize,
    hi: usize,
    executed: &mut Vec<ExecutedSwap>,
) -> Result<(), HybridError> {
    if hi - lo <= 1 {
        return Ok(());
    }
    let mid = (lo + hi) / 2;
    nested_execute(inv, costs, path, lo, mid, executed)?;
    nested_execute(inv, costs, path, mid, hi, executed)?;
    let (swapper, a, b) = (path[mid], path[lo], path[hi]);
    inv.apply_swap(swapper, a, b, costs)
        .map_err(|cause| HybridError::PartialExecution {
            executed: executed.clone(),
            cause,
        })?;
    executed.push(ExecutedSwap { swapper, a, b });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_cycle;

    fn nid(i: usize) -> NodeId {
        NodeId(i)
    }

    fn pair(a: usize, b: usize) -> PairKey {
        PairKey::new(nid(a), nid(b)).unwrap()
    }

    fn params(d: u64) -> NestedCostParams {
        NestedCostParams::new(d).unwrap()
    }

    #[test]
    fn single_hop_costs_nothing() {
        for d in 1..=5 {
            assert_eq!(nested_swap_cost(1, params(d)).unwrap(), 0);
        }
    }

    #[test]
    fn two_hops_cost_the_distill_overhead() {
        assert_eq!(nested_swap_cost(2, params(3)).unwrap(), 3);
        assert_eq!(nested_swap_cost(2, params(1)).unwrap(), 1);
    }

    #[test]
    fn recursion_matches_hand_expansion() {
        // s(3)=2*(0+2)=4, s(5)=2*(2+4)=12 at D=2.
        assert_eq!(nested_swap_cost(5, params(2)).unwrap(), 12);
        // s(4)=1*(1+1)=2 at D=1.
        assert_eq!(nested_swap_cost(4, params(1)).unwrap(), 2);
    }

    #[test]
    fn zero_length_is_rejected() {
        assert!(matches!(
            nested_swap_cost(0, params(1)),
            Err(PlannerError::InvalidLength(0))
        ));
    }

    #[test]
    fn cost_is_nondecreasing_in_hops_and_increasing_in_distill() {
        for d in 1..=5 {
            let mut prev = 0;
            for n in 1..=64 {
                let cost = nested_swap_cost(n, params(d)).unwrap();
                assert!(cost >= prev, "n={n} d={d}");
                prev = cost;
            }
        }
        for n in 2..=64 {
            let mut prev = 0;
            for d in 1..=5 {
                let cost = nested_swap_cost(n, params(d)).unwrap();
                assert!(cost > prev, "n={n} d={d}");
                prev = cost;
            }
        }
    }

    #[test]
    fn power_of_two_closed_form_at_unit_distill() {
        for k in 1..=6 {
            let n = 1usize << k;
            assert_eq!(nested_swap_cost(n, params(1)).unwrap(), 1 << (k - 1));
        }
    }

    #[test]
    fn denominator_sums_per_event_costs() {
        let graph = build_cycle(6).unwrap();
        // (0,3) is 3 hops, (0,2) is 2 hops; s(3)+s(2) = 1+1 at D=1.
        let events = [pair(0, 3), pair(0, 2)];
        assert_eq!(baseline_denominator(&events, &graph, params(1)).unwrap(), 2);
    }

    #[test]
    fn adjacent_events_contribute_zero() {
        let graph = build_cycle(5).unwrap();
        let events = [pair(0, 1), pair(3, 4)];
        assert_eq!(baseline_denominator(&events, &graph, params(4)).unwrap(), 0);
    }

    #[test]
    fn empty_event_list_has_zero_denominator() {
        let graph = build_cycle(5).unwrap();
        assert_eq!(baseline_denominator(&[], &graph, params(2)).unwrap(), 0);
    }

    #[test]
    fn denominator_propagates_unreachable() {
        let mut graph = GenerationGraph::new(4);
        graph.add_edge(nid(0), nid(1), 1.0).unwrap();
        graph.add_edge(nid(2), nid(3), 1.0).unwrap();
        assert!(matches!(
            baseline_denominator(&[pair(0, 3)], &graph, params(1)),
            Err(PlannerError::Topology(TopologyError::Unreachable { .. }))
        ));
    }

    #[test]
    fn hybrid_fulfills_over_one_relay() {
        let costs = CostTable::default();
        let mut inv = PairInventory::new(3);
        inv.add_pairs(nid(0), nid(1), 1).unwrap();
        inv.add_pairs(nid(1), nid(2), 1).unwrap();
        let swaps = hybrid_fulfill(&mut inv, &costs, nid(0), nid(2)).unwrap();
        assert_eq!(swaps.len(), 1);
        assert_eq!(swaps[0].swapper, nid(1));
        assert_eq!(inv.count(nid(0), nid(2)).unwrap(), 1);
        assert_eq!(inv.total(), 1);
    }

    #[test]
    fn hybrid_reports_missing_path() {
        let costs = CostTable::default();
        let mut inv = PairInventory::new(3);
        inv.add_pairs(nid(0), nid(1), 1).unwrap();
        assert!(matches!(
            hybrid_fulfill(&mut inv, &costs, nid(0), nid(2)),
            Err(HybridError::PathNotFound { .. })
        ));
        // Nothing stored at all: same failure.
        let mut empty = PairInventory::new(3);
        assert!(matches!(
            hybrid_fulfill(&mut empty, &costs, nid(0), nid(2)),
            Err(HybridError::PathNotFound { .. })
        ));
    }

    #[test]
    fn hybrid_takes_shortcut_through_stored_pairs() {
        // Stored (0,3) beats the long stored chain 0-1-2-3-4.
        let costs = CostTable::default();
        let mut inv = PairInventory::new(5);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4)] {
            inv.add_pairs(nid(a), nid(b), 1).unwrap();
        }
        inv.add_pairs(nid(0), nid(3), 1).unwrap();
        let swaps = hybrid_fulfill(&mut inv, &costs, nid(0), nid(4)).unwrap();
        assert_eq!(swaps.len(), 1);
        assert_eq!(swaps[0].swapper, nid(3));
        assert_eq!(inv.count(nid(0), nid(4)).unwrap(), 1);
    }

    #[test]
    fn hybrid_success_performs_path_len_minus_one_swaps() {
        let costs = CostTable::default();
        let mut inv = PairInventory::new(6);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)] {
            inv.add_pairs(nid(a), nid(b), 1).unwrap();
        }
        let swaps = hybrid_fulfill(&mut inv, &costs, nid(0), nid(5)).unwrap();
        assert_eq!(swaps.len(), 4);
        assert_eq!(inv.count(nid(0), nid(5)).unwrap(), 1);
    }

    #[test]
    fn hybrid_shortfall_keeps_executed_prefix() {
        // D=2 everywhere: the first sub-swap produces a single (1,3),
        // but the joining swap needs two of them.
        let costs = CostTable::uniform_distill(2).unwrap();
        let mut inv = PairInventory::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            inv.add_pairs(nid(a), nid(b), 2).unwrap();
        }
        let err = hybrid_fulfill(&mut inv, &costs, nid(0), nid(3)).unwrap_err();
        match err {
            HybridError::PartialExecution { executed, cause } => {
                assert_eq!(executed.len(), 1);
                assert_eq!(executed[0].swapper, nid(2));
                assert!(matches!(cause, InventoryError::InsufficientPairs { .. }));
            }
            other => panic!("expected partial execution, got {other:?}"),
        }
        // The partial swap's effects stay: (1,3) exists, inputs drained.
        assert_eq!(inv.count(nid(1), nid(3)).unwrap(), 1);
        assert_eq!(inv.count(nid(1), nid(2)).unwrap(), 0);
        assert_eq!(inv.count(nid(2), nid(3)).unwrap(), 0);
    }
}
