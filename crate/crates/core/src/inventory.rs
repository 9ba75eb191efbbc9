//! The Bell-pair ledger: per-pair counts plus the three primitive
//! transitions (generation deposit, swap, consumption).
//!
//! Distillation is modeled as a per-use drain: using a stored pair
//! `(u,v)` — as a swap input at either endpoint, or for a consumption —
//! costs `distill(u,v)` stored units and yields one swap product or one
//! fulfilled request. Loss and QEC thinning act on the generation side
//! and live in the simulation loop, not here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{InvalidPair, NodeId, PairKey};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InventoryError {
    #[error(transparent)]
    InvalidPair(#[from] InvalidPair),
    #[error("node {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("swap endpoints must be pairwise distinct: swapper {swapper}, outputs {a}, {b}")]
    InvalidSwap {
        swapper: NodeId,
        a: NodeId,
        b: NodeId,
    },
    #[error("insufficient pairs {pair}: have {available}, need {required}")]
    InsufficientPairs {
        pair: PairKey,
        available: u64,
        required: u64,
    },
    #[error("amount must be at least 1")]
    ZeroAmount,
    #[error("invalid cost table: {0}")]
    InvalidCost(String),
}

/// Per-pair distillation and loss overheads plus the global QEC ratio.
///
/// Defaults (distill 1, survival 1, QEC 1) make every overhead a no-op.
/// `survival` is the fraction of generated pairs that survive to be
/// usable, so it lives in (0, 1]; values above 1 are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostTableRepr", into = "CostTableRepr")]
pub struct CostTable {
    distill_default: u64,
    survival_default: f64,
    qec_overhead: f64,
    distill_overrides: BTreeMap<PairKey, u64>,
    survival_overrides: BTreeMap<PairKey, f64>,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            distill_default: 1,
            survival_default: 1.0,
            qec_overhead: 1.0,
            distill_overrides: BTreeMap::new(),
            survival_overrides: BTreeMap::new(),
        }
    }
}

impl CostTable {
    /// Uniform distillation overhead, no loss, no QEC thinning.
    pub fn uniform_distill(distill: u64) -> Result<Self, InventoryError> {
        CostTable::default().with_distill_default(distill)
    }

    pub fn with_distill_default(mut self, distill: u64) -> Result<Self, InventoryError> {
        if distill < 1 {
            return Err(InventoryError::InvalidCost(
                "distill overhead must be at least 1".into(),
            ));
        }
        self.distill_default = distill;
        Ok(self)
    }

    pub fn with_survival_default(mut self, survival: f64) -> Result<Self, InventoryError> {
        check_survival(survival)?;
        self.survival_default = survival;
        Ok(self)
    }

    pub fn with_qec_overhead(mut self, qec: f64) -> Result<Self, InventoryError> {
        if !qec.is_finite() || qec < 1.0 {
            return Err(InventoryError::InvalidCost(format!(
                "QEC overhead must be a finite value >= 1, got {qec}"
            )));
        }
        self.qec_overhead = qec;
        Ok(self)
    }

    pub fn with_distill_override(mut self, pair: PairKey, d: u64) -> Result<Self, InventoryError> {
        if d < 1 {
            return Err(InventoryError::InvalidCost(
                "distill overhead must be at least 1".into(),
            ));
        }
        self.distill_overrides.insert(pair, d);
        Ok(self)
    }

    pub fn with_survival_override(
        mut self,
        pair: PairKey,
        survival: f64,
    ) -> Result<Self, InventoryError> {
        check_survival(survival)?;
        self.survival_overrides.insert(pair, survival);
        Ok(self)
    }

    /// Distillation overhead for one use of pair `key`.
    pub fn distill(&self, key: PairKey) -> u64 {
        self.distill_overrides
            .get(&key)
            .copied()
            .unwrap_or(self.distill_default)
    }

    /// Surviving fraction of generated pairs for `key`.
    pub fn survival(&self, key: PairKey) -> f64 {
        self.survival_overrides
            .get(&key)
            .copied()
            .unwrap_or(self.survival_default)
    }

    pub fn qec_overhead(&self) -> f64 {
        self.qec_overhead
    }

    pub fn distill_default(&self) -> u64 {
        self.distill_default
    }
}

fn check_survival(survival: f64) -> Result<(), InventoryError> {
    if !(survival > 0.0 && survival <= 1.0) {
        return Err(InventoryError::InvalidCost(format!(
            "survival fraction must lie in (0, 1], got {survival}"
        )));
    }
    Ok(())
}

/// Serde mirror: overrides as `[x, y, value]` triples.
#[derive(Serialize, Deserialize)]
struct CostTableRepr {
    #[serde(default = "one_u64")]
    distill: u64,
    #[serde(default = "one_f64")]
    survival: f64,
    #[serde(default = "one_f64")]
    qec_overhead: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    distill_overrides: Vec<(usize, usize, u64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    survival_overrides: Vec<(usize, usize, f64)>,
}

fn one_u64() -> u64 {
    1
}

fn one_f64() -> f64 {
    1.0
}

impl TryFrom<CostTableRepr> for CostTable {
    type Error = InventoryError;

    fn try_from(repr: CostTableRepr) -> Result<Self, Self::Error> {
        let mut table = CostTable::default()
            .with_distill_default(repr.distill)?
            .with_survival_default(repr.survival)?
            .with_qec_overhead(repr.qec_overhead)?;
        for (a, b, d) in repr.distill_overrides {
            let key = PairKey::new(NodeId(a), NodeId(b))?;
            table = table.with_distill_override(key, d)?;
        }
        for (a, b, s) in repr.survival_overrides {
            let key = PairKey::new(NodeId(a), NodeId(b))?;
            table = table.with_survival_override(key, s)?;
        }
        Ok(table)
    }
}

impl From<CostTable> for CostTableRepr {
    fn from(table: CostTable) -> Self {
        CostTableRepr {
            distill: table.distill_default,
            survival: table.survival_default,
            qec_overhead: table.qec_overhead,
            distill_overrides: table
                .distill_overrides
                .into_iter()
                .map(|(k, d)| (k.lo().index(), k.hi().index(), d))
                .collect(),
            survival_overrides: table
                .survival_overrides
                .into_iter()
                .map(|(k, s)| (k.lo().index(), k.hi().index(), s))
                .collect(),
        }
    }
}

/// What a swap drained from its two input pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapDrain {
    pub left: u64,
    pub right: u64,
}

impl SwapDrain {
    pub fn total(self) -> u64 {
        self.left + self.right
    }
}

/// Global ledger of Bell-pair counts keyed by unordered node pair.
///
/// Counts are whole pairs; operations reject rather than underflow, so
/// every count stays non-negative through any operation sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairInventory {
    node_count: usize,
    counts: Vec<u64>,
    total: u64,
}

impl PairInventory {
    pub fn new(node_count: usize) -> Self {
        let slots = node_count * node_count.saturating_sub(1) / 2;
        PairInventory {
            node_count,
            counts: vec![0; slots],
            total: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Sum of all pair counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    fn slot(&self, key: PairKey) -> Result<usize, InventoryError> {
        let (lo, hi) = (key.lo().index(), key.hi().index());
        if hi >= self.node_count {
            return Err(InventoryError::NodeOutOfRange {
                node: key.hi(),
                node_count: self.node_count,
            });
        }
        Ok(hi * (hi - 1) / 2 + lo)
    }

    fn key_checked(&self, a: NodeId, b: NodeId) -> Result<PairKey, InventoryError> {
        let key = PairKey::new(a, b)?;
        self.slot(key)?;
        Ok(key)
    }

    /// Current count for the unordered pair `(a, b)`.
    pub fn count(&self, a: NodeId, b: NodeId) -> Result<u64, InventoryError> {
        let key = self.key_checked(a, b)?;
        Ok(self.count_key(key))
    }

    pub fn count_key(&self, key: PairKey) -> u64 {
        match self.slot(key) {
            Ok(slot) => self.counts[slot],
            Err(_) => 0,
        }
    }

    /// Deposits `amount >= 1` pairs between `a` and `b`.
    pub fn add_pairs(&mut self, a: NodeId, b: NodeId, amount: u64) -> Result<(), InventoryError> {
        let key = self.key_checked(a, b)?;
        self.add_pairs_key(key, amount)
    }

    pub fn add_pairs_key(&mut self, key: PairKey, amount: u64) -> Result<(), InventoryError> {
        if amount == 0 {
            return Err(InventoryError::ZeroAmount);
        }
        let slot = self.slot(key)?;
        self.counts[slot] += amount;
        self.total += amount;
        Ok(())
    }

    fn drain(&mut self, key: PairKey, amount: u64) -> Result<(), InventoryError> {
        let slot = self.slot(key)?;
        let available = self.counts[slot];
        if available < amount {
            return Err(InventoryError::InsufficientPairs {
                pair: key,
                available,
                required: amount,
            });
        }
        self.counts[slot] -= amount;
        self.total -= amount;
        Ok(())
    }

    /// Swap at `swapper`, collapsing stored `(swapper,a)` and `(swapper,b)`
    /// pairs into one `(a,b)` pair. Each input pair is drained by its
    /// distillation overhead, so total inventory strictly decreases.
    pub fn apply_swap(
        &mut self,
        swapper: NodeId,
        a: NodeId,
        b: NodeId,
        costs: &CostTable,
    ) -> Result<SwapDrain, InventoryError> {
        if swapper == a || swapper == b || a == b {
            return Err(InventoryError::InvalidSwap { swapper, a, b });
        }
        let left = self.key_checked(swapper, a)?;
        let right = self.key_checked(swapper, b)?;
        let product = self.key_checked(a, b)?;
        let need_left = costs.distill(left);
        let need_right = costs.distill(right);
        // Validate both inputs before mutating either.
        for (key, need) in [(left, need_left), (right, need_right)] {
            let available = self.count_key(key);
            if available < need {
                return Err(InventoryError::InsufficientPairs {
                    pair: key,
                    available,
                    required: need,
                });
            }
        }
        self.drain(left, need_left)?;
        self.drain(right, need_right)?;
        self.add_pairs_key(product, 1)?;
        Ok(SwapDrain {
            left: need_left,
            right: need_right,
        })
    }

    /// Consumes one request's worth of `(a, b)` pairs, draining the pair's
    /// distillation overhead. Returns the drained amount.
    pub fn consume(
        &mut self,
        a: NodeId,
        b: NodeId,
        costs: &CostTable,
    ) -> Result<u64, InventoryError> {
        let key = self.key_checked(a, b)?;
        let need = costs.distill(key);
        self.drain(key, need)?;
        Ok(need)
    }

    /// Non-zero entries in canonical slot order.
    pub fn iter(&self) -> impl Iterator<Item = (PairKey, u64)> + '_ {
        (0..self.node_count).flat_map(move |hi| {
            (0..hi).filter_map(move |lo| {
                let key = PairKey::new(NodeId(lo), NodeId(hi)).expect("lo < hi");
                let count = self.counts[hi * (hi - 1) / 2 + lo];
                (count > 0).then_some((key, count))
            })
        })
    }

    /// Nodes sharing at least one stored pair with `x`, ascending.
    pub fn partners_of(&self, x: NodeId) -> Vec<NodeId> {
        let mut partners = Vec::new();
        for other in 0..self.node_count {
            if other == x.index() {
                continue;
            }
            let key = PairKey::new(x, NodeId(other)).expect("distinct");
            if self.count_key(key) > 0 {
                partners.push(NodeId(other));
            }
        }
        partners
    }
}

/// One ledger transition, as recorded in the operation log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerOp {
    Generate {
        tick: u64,
        pair: PairKey,
        amount: u64,
    },
    Swap {
        tick: u64,
        swapper: NodeId,
        a: NodeId,
        b: NodeId,
        drain_left: u64,
        drain_right: u64,
    },
    Consume {
        tick: u64,
        pair: PairKey,
        drained: u64,
    },
}

/// Append-only log of ledger transitions, exportable as CSV and
/// replayable onto a fresh inventory.
#[derive(Debug, Clone, Default)]
pub struct OpLog {
    ops: Vec<LedgerOp>,
}

impl OpLog {
    pub fn new() -> Self {
        OpLog::default()
    }

    pub fn push(&mut self, op: LedgerOp) {
        self.ops.push(op);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[LedgerOp] {
        &self.ops
    }

    /// CSV dump, one line per event.
    ///
    /// Columns: `tick,kind,swapper,x,y,drain_x,drain_y`. For generate
    /// events `drain_x` carries the deposited amount; for consume events
    /// it carries the drained amount; unused columns stay empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick,kind,swapper,x,y,drain_x,drain_y\n");
        for op in &self.ops {
            let line = match *op {
                LedgerOp::Generate { tick, pair, amount } => {
                    format!("{tick},generate,,{},{},{amount},\n", pair.lo(), pair.hi())
                }
                LedgerOp::Swap {
                    tick,
                    swapper,
                    a,
                    b,
                    drain_left,
                    drain_right,
                } => format!("{tick},swap,{swapper},{a},{b},{drain_left},{drain_right}\n"),
                LedgerOp::Consume {
                    tick,
                    pair,
                    drained,
                } => format!("{tick},consume,,{},{},{drained},\n", pair.lo(), pair.hi()),
            };
            out.push_str(&line);
        }
        out
    }

    /// Replays the logged sequence onto `inventory`, checking that each
    /// swap and consume drains exactly what was recorded.
    pub fn replay(
        &self,
        inventory: &mut PairInventory,
        costs: &CostTable,
    ) -> Result<(), InventoryError> {
        for op in &self.ops {
            match *op {
                LedgerOp::Generate { pair, amount, .. } => {
                    inventory.add_pairs_key(pair, amount)?;
                }
                LedgerOp::Swap {
                    swapper,
                    a,
                    b,
                    drain_left,
                    drain_right,
                    ..
                } => {
                    let drain = inventory.apply_swap(swapper, a, b, costs)?;
                    if drain.left != drain_left || drain.right != drain_right {
                        return Err(InventoryError::InvalidCost(
                            "replay drained different amounts than the log records".into(),
                        ));
                    }
                }
                LedgerOp::Consume { pair, drained, .. } => {
                    let got = inventory.consume(pair.lo(), pair.hi(), costs)?;
                    if got != drained {
                        return Err(InventoryError::InvalidCost(
                            "replay drained different amounts than the log records".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
