//! Path-oblivious max-min balancing: each node looks for swaps that
//! raise a strictly smaller pair count using its own surplus, and
//! executes the one whose target count is lowest.
//!
//! A swap at `x` collapsing `(x,y)` and `(x,y')` into `(y,y')` is
//! *preferable* when
//!
//! ```text
//! C(y,y') + 1 <= min(C(x,y) - D(x,y), C(x,y') - D(x,y'))
//! ```
//!
//! so `x` only spends its counts when the produced pair's count stays
//! at or below what both inputs retain. The protocol here reads one
//! shared ledger directly; disseminating the counts is out of scope.

use crate::ids::{NodeId, PairKey};
use crate::inventory::{CostTable, InventoryError, PairInventory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BalancerError {
    #[error("swap candidate nodes must be pairwise distinct: {x}, {y}, {y2}")]
    InvalidCandidate { x: NodeId, y: NodeId, y2: NodeId },
    #[error(transparent)]
    Inventory(#[from] InventoryError),
}

/// A preferable swap, captured with the target count seen at evaluation
/// time. `left < right` canonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapCandidate {
    pub swapper: NodeId,
    pub left: NodeId,
    pub right: NodeId,
    pub target_count: u64,
}

impl SwapCandidate {
    pub fn target_pair(&self) -> PairKey {
        PairKey::new(self.left, self.right).expect("candidate endpoints are distinct")
    }
}

/// Evaluates the preferable-swap inequality for the swap at `x`
/// collapsing `(x,y)` and `(x,y')` into `(y,y')`.
pub fn is_preferable(
    inv: &PairInventory,
    costs: &CostTable,
    x: NodeId,
    y: NodeId,
    y2: NodeId,
) -> Result<bool, BalancerError> {
    if x == y || x == y2 || y == y2 {
        return Err(BalancerError::InvalidCandidate { x, y, y2 });
    }
    let xy = PairKey::new(x, y).expect("distinct");
    let xy2 = PairKey::new(x, y2).expect("distinct");
    let target = PairKey::new(y, y2).expect("distinct");
    // Signed arithmetic: the surplus terms can go negative.
    let surplus_y = inv.count_key(xy) as i64 - costs.distill(xy) as i64;
    let surplus_y2 = inv.count_key(xy2) as i64 - costs.distill(xy2) as i64;
    let target_count = inv.count_key(target) as i64;
    #[allow(clippy::int_plus_one)] // written as the inequality is defined
    Ok(target_count + 1 <= surplus_y.min(surplus_y2))
}

/// All preferable swaps at `x`, over unordered pairs of its entanglement
/// partners (nodes sharing at least one stored pair with `x`), in
/// canonical target-pair order.
pub fn candidates(inv: &PairInventory, costs: &CostTable, x: NodeId) -> Vec<SwapCandidate> {
    let partners = inv.partners_of(x);
    let mut found = Vec::new();
    for (i, &y) in partners.iter().enumerate() {
        for &y2 in &partners[i + 1..] {
            let preferable =
                is_preferable(inv, costs, x, y, y2).expect("partners are distinct from x");
            if preferable {
                let target = PairKey::new(y, y2).expect("distinct partners");
                found.push(SwapCandidate {
                    swapper: x,
                    left: target.lo(),
                    right: target.hi(),
                    target_count: inv.count_key(target),
                });
            }
        }
    }
    found
}

/// The candidate with minimal target count; ties break toward the
/// smallest canonical target pair, keeping runs reproducible.
pub fn select_swap(inv: &PairInventory, costs: &CostTable, x: NodeId) -> Option<SwapCandidate> {
    candidates(inv, costs, x)
        .into_iter()
        .min_by_key(|c| (c.target_count, c.target_pair()))
}

/// Sweeps `node_order` repeatedly, executing each node's selected swap,
/// until a full sweep performs no swap. Returns the number of swaps.
///
/// Intended for a quiesced network (no generation or consumption racing
/// the sweep). Terminates because every swap strictly shrinks total
/// inventory.
pub fn run_to_quiescence(inv: &mut PairInventory, costs: &CostTable, node_order: &[NodeId]) -> u64 {
    let mut swaps = 0;
    loop {
        let mut swaps_this_sweep = 0;
        for &node in node_order {
            if let Some(c) = select_swap(inv, costs, node) {
                inv.apply_swap(c.swapper, c.left, c.right, costs)
                    .expect("preferable swap implies both inputs hold at least distill + 1");
                swaps_this_sweep += 1;
            }
        }
        swaps += swaps_this_sweep;
        if swaps_this_sweep == 0 {
            return swaps;
        }
    }
}
