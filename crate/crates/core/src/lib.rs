//! Path-oblivious Bell-pair distribution for quantum repeater networks.
//!
//! Instead of reserving a repeater path per request, the protocol here
//! swaps to balance stored Bell pairs across the whole network and lets
//! consumers draw from the balanced stock. The crate provides:
//!
//! - [`topology`]: generation graphs (cycles, random connected torus
//!   subgraphs, explicit edge lists) and shortest-path queries;
//! - [`inventory`]: the pair-count ledger with distillation-aware
//!   generation, swap, and consumption transitions;
//! - [`balancer`]: the max-min preferable-swap protocol;
//! - [`planner`]: the nested-swapping cost baseline and on-demand
//!   (hybrid) fulfillment;
//! - [`lp`]: the steady-state rate linear program with a built-in
//!   two-phase simplex solver and LP-format export;
//! - [`sim`]: the deterministic discrete-event experiment engine.

pub mod balancer;
pub mod ids;
pub mod inventory;
pub mod lp;
pub mod planner;
pub mod sim;
pub mod topology;

pub use ids::{NodeId, PairKey};
