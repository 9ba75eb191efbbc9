//! Node identifiers and canonical unordered node pairs.
//!
//! Every network object in this crate is keyed either by a [`NodeId`] (a
//! dense index into the node set) or by a [`PairKey`], the canonical
//! representation of an unordered node pair. Keeping the pair canonical
//! (`lo < hi`) makes symmetric quantities such as pair counts and
//! generation rates structurally symmetric: there is only one slot for
//! `(x, y)` and `(y, x)`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense node index in `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId(index)
    }
}

/// Error raised when an operation names a pair with coincident endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("invalid pair: both endpoints are node {node}")]
pub struct InvalidPair {
    pub node: NodeId,
}

/// Canonical unordered pair of distinct nodes, ordered `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct PairKey {
    lo: NodeId,
    hi: NodeId,
}

impl PairKey {
    /// Canonicalizes `(a, b)`; rejects `a == b`.
    pub fn new(a: NodeId, b: NodeId) -> Result<Self, InvalidPair> {
        if a == b {
            return Err(InvalidPair { node: a });
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Ok(PairKey { lo, hi })
    }

    pub fn lo(self) -> NodeId {
        self.lo
    }

    pub fn hi(self) -> NodeId {
        self.hi
    }

    pub fn nodes(self) -> (NodeId, NodeId) {
        (self.lo, self.hi)
    }

    pub fn contains(self, node: NodeId) -> bool {
        self.lo == node || self.hi == node
    }

    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other(self, node: NodeId) -> Option<NodeId> {
        if node == self.lo {
            Some(self.hi)
        } else if node == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

impl TryFrom<(usize, usize)> for PairKey {
    type Error = InvalidPair;

    fn try_from((a, b): (usize, usize)) -> Result<Self, Self::Error> {
        PairKey::new(NodeId(a), NodeId(b))
    }
}

impl From<PairKey> for (usize, usize) {
    fn from(key: PairKey) -> Self {
        (key.lo.0, key.hi.0)
    }
}
