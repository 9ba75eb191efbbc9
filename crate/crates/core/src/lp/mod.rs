//! Steady-state rate optimization.
//!
//! Bell pairs arrive between `x` and `y` through direct generation and
//! through swaps at third nodes; they depart through consumption and
//! through swaps at `x` or `y` that spend the pair. With distillation
//! drains `D`, survival fractions `L`, and QEC thinning `R`, each pair
//! obeys
//!
//! ```text
//! D(x,y) * (c(x,y) + sum_i sigma_x(i,y) + sigma_y(i,x))
//!     <= L(x,y) * (g(x,y)/R + sum_i sigma_i(x,y))
//! ```
//!
//! This module builds that program over a generation graph and demand
//! map, solves it for a menu of objectives with a two-phase primal
//! simplex kernel, and exports models as LP-format text.

mod export;
mod simplex;

pub use export::export_lp_text;

use std::collections::BTreeMap;
use std::fmt;

use crate::ids::{NodeId, PairKey};
use crate::inventory::CostTable;
use crate::topology::{component_labels, GenerationGraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid rate problem: {0}")]
    InvalidProblem(String),
    #[error("demand {pair} spans disconnected components of the generation graph")]
    DisconnectedDemand { pair: PairKey },
    #[error("alpha scaling needs at least one pair with positive demand")]
    DegenerateDemand,
    #[error("simplex stalled after {iterations} pivots")]
    SolverStalled { iterations: usize },
    #[error("solution failed verification: {0}")]
    VerificationFailed(String),
}

/// Index of a variable within its [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, f64)>,
}

/// Generic bounded-variable linear program.
#[derive(Debug, Clone)]
pub struct LpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
}

impl Default for LpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl LpModel {
    pub fn new() -> Self {
        LpModel {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Objective {
                sense: Sense::Maximize,
                terms: Vec::new(),
            },
        }
    }

    /// Declares a variable with bounds `lower <= x <= upper`. Either
    /// bound may be infinite on its open side.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if name.is_empty() || name.contains(|c: char| c.is_whitespace()) {
            return Err(LpError::InvalidModel(format!(
                "variable name {name:?} must be non-empty and whitespace-free"
            )));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(LpError::InvalidModel(format!(
                "variable {name} has invalid bounds [{lower}, {upper}]"
            )));
        }
        if self.vars.iter().any(|v| v.name == name) {
            return Err(LpError::InvalidModel(format!(
                "duplicate variable name {name}"
            )));
        }
        self.vars.push(Variable { name, lower, upper });
        Ok(VarId(self.vars.len() - 1))
    }

    /// Adds a linear constraint; duplicate variable terms are summed and
    /// zero coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(LpError::InvalidModel(format!(
                "constraint {name} has non-finite rhs {rhs}"
            )));
        }
        let terms = self.normalize_terms(&name, terms)?;
        self.constraints.push(Constraint {
            name,
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, f64)>) -> Result<(), LpError> {
        let terms = self.normalize_terms("objective", terms)?;
        self.objective = Objective { sense, terms };
        Ok(())
    }

    fn normalize_terms(
        &self,
        context: &str,
        terms: Vec<(VarId, f64)>,
    ) -> Result<Vec<(VarId, f64)>, LpError> {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (var, coeff) in terms {
            if var.index() >= self.vars.len() {
                return Err(LpError::InvalidModel(format!(
                    "{context} references undeclared variable #{}",
                    var.index()
                )));
            }
            if !coeff.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "{context} has non-finite coefficient {coeff}"
                )));
            }
            *merged.entry(var).or_insert(0.0) += coeff;
        }
        Ok(merged.into_iter().filter(|(_, c)| *c != 0.0).collect())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.vars[id.index()].name
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

/// Solver output: a status, the objective value, and (when optimal) one
/// value per declared variable.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    values: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, id: VarId) -> f64 {
        self.values.get(id.index()).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Two-phase primal simplex with Bland's anti-cycling rule.
///
/// Feasibility and optimality tolerances are 1e-9; any reported optimum
/// is re-verified against every constraint and bound at 1e-7.
pub fn simplex_solve(model: &LpModel) -> Result<LpSolution, LpError> {
    simplex::solve(model)
}

/// Whether a rate family is pinned to its input values or solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    Fixed,
    Variable,
}

/// A steady-state rate problem over a generation graph.
///
/// The graph's edge rates serve as the fixed generation rates when
/// `generation` is [`RateMode::Fixed`] and as the caps `gamma` when it
/// is [`RateMode::Variable`]. The demand map plays the same dual role
/// for consumption: fixed rates or caps `kappa`.
#[derive(Debug, Clone)]
pub struct RateProblem {
    pub graph: GenerationGraph,
    pub demand: BTreeMap<PairKey, f64>,
    pub costs: CostTable,
    pub generation: RateMode,
    pub consumption: RateMode,
}

impl RateProblem {
    pub fn new(
        graph: GenerationGraph,
        demand: BTreeMap<PairKey, f64>,
        costs: CostTable,
    ) -> Result<Self, LpError> {
        for (&pair, &kappa) in &demand {
            if pair.hi().index() >= graph.node_count() {
                return Err(LpError::InvalidProblem(format!(
                    "demand pair {pair} is out of range for {} nodes",
                    graph.node_count()
                )));
            }
            if !kappa.is_finite() || kappa < 0.0 {
                return Err(LpError::InvalidProblem(format!(
                    "demand for {pair} must be finite and non-negative, got {kappa}"
                )));
            }
        }
        Ok(RateProblem {
            graph,
            demand,
            costs,
            generation: RateMode::Fixed,
            consumption: RateMode::Variable,
        })
    }

    pub fn with_generation(mut self, mode: RateMode) -> Self {
        self.generation = mode;
        self
    }

    pub fn with_consumption(mut self, mode: RateMode) -> Self {
        self.consumption = mode;
        self
    }

    fn positive_demand(&self) -> impl Iterator<Item = (PairKey, f64)> + '_ {
        self.demand
            .iter()
            .filter(|(_, &k)| k > 0.0)
            .map(|(&p, &k)| (p, k))
    }
}

/// How consumption enters the balance constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConsumptionForm {
    /// `c` pinned at the demand values (appears in the rhs).
    FixedAtDemand,
    /// One bounded variable per demanded pair.
    PerPairVariable,
    /// `c(x,y) = alpha * kappa(x,y)` for a single scalar `alpha`.
    AlphaScaled,
}

/// A built balance program plus the indices of its semantic variables.
#[derive(Debug, Clone)]
pub struct BalanceModel {
    pub model: LpModel,
    cform: ConsumptionForm,
    sigma: BTreeMap<(NodeId, PairKey), VarId>,
    gen_vars: BTreeMap<PairKey, VarId>,
    cons_vars: BTreeMap<PairKey, VarId>,
    alpha: Option<VarId>,
    gen_cap: Option<VarId>,
}

impl BalanceModel {
    pub fn sigma_vars(&self) -> &BTreeMap<(NodeId, PairKey), VarId> {
        &self.sigma
    }

    pub fn generation_vars(&self) -> &BTreeMap<PairKey, VarId> {
        &self.gen_vars
    }

    pub fn consumption_vars(&self) -> &BTreeMap<PairKey, VarId> {
        &self.cons_vars
    }

    pub fn alpha_var(&self) -> Option<VarId> {
        self.alpha
    }
}

/// Builds the balance program for `prob` using its mode flags: one
/// swap-rate variable per (swapper, unordered pair) triple and one
/// arrival/departure constraint per unordered pair.
pub fn build_balance_model(prob: &RateProblem) -> Result<BalanceModel, LpError> {
    let cform = match prob.consumption {
        RateMode::Fixed => ConsumptionForm::FixedAtDemand,
        RateMode::Variable => ConsumptionForm::PerPairVariable,
    };
    build_model(prob, cform, false)
}

fn all_pairs(node_count: usize) -> impl Iterator<Item = PairKey> {
    (0..node_count).flat_map(move |lo| {
        ((lo + 1)..node_count).map(move |hi| PairKey::new(NodeId(lo), NodeId(hi)).expect("lo < hi"))
    })
}

fn build_model(
    prob: &RateProblem,
    cform: ConsumptionForm,
    with_gen_cap: bool,
) -> Result<BalanceModel, LpError> {
    let n = prob.graph.node_count();
    let labels = component_labels(&prob.graph);
    for (pair, _) in prob.positive_demand() {
        if labels[pair.lo().index()] != labels[pair.hi().index()] {
            return Err(LpError::DisconnectedDemand { pair });
        }
    }
    if cform == ConsumptionForm::AlphaScaled && prob.positive_demand().next().is_none() {
        return Err(LpError::DegenerateDemand);
    }

    let mut model = LpModel::new();
    let mut sigma = BTreeMap::new();
    for pair in all_pairs(n) {
        for i in (0..n).map(NodeId) {
            if pair.contains(i) {
                continue;
            }
            let name = format!("sigma_{}_{}_{}", i, pair.lo(), pair.hi());
            let id = model.add_var(name, 0.0, f64::INFINITY)?;
            sigma.insert((i, pair), id);
        }
    }

    let mut gen_vars = BTreeMap::new();
    if prob.generation == RateMode::Variable {
        for (pair, gamma) in prob.graph.edges() {
            let name = format!("g_{}_{}", pair.lo(), pair.hi());
            gen_vars.insert(pair, model.add_var(name, 0.0, gamma)?);
        }
    }

    let mut cons_vars = BTreeMap::new();
    let mut alpha = None;
    match cform {
        ConsumptionForm::PerPairVariable => {
            for (pair, kappa) in prob.positive_demand() {
                let name = format!("c_{}_{}", pair.lo(), pair.hi());
                cons_vars.insert(pair, model.add_var(name, 0.0, kappa)?);
            }
        }
        ConsumptionForm::AlphaScaled => {
            alpha = Some(model.add_var("alpha", 0.0, 1.0)?);
        }
        ConsumptionForm::FixedAtDemand => {}
    }

    let gen_cap = if with_gen_cap {
        Some(model.add_var("g_max", 0.0, f64::INFINITY)?)
    } else {
        None
    };

    // One balance constraint per unordered pair: departures minus
    // arrivals on the left, fixed-rate contributions on the right.
    for pair in all_pairs(n) {
        let distill = prob.costs.distill(pair) as f64;
        let survival = prob.costs.survival(pair);
        let qec = prob.costs.qec_overhead();
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        let mut rhs = 0.0;

        for i in (0..n).map(NodeId) {
            if pair.contains(i) {
                continue;
            }
            terms.push((sigma[&(i, pair)], -survival));
            let from_lo = PairKey::new(i, pair.hi()).expect("i not in pair");
            let from_hi = PairKey::new(i, pair.lo()).expect("i not in pair");
            terms.push((sigma[&(pair.lo(), from_lo)], distill));
            terms.push((sigma[&(pair.hi(), from_hi)], distill));
        }

        if prob.graph.has_edge(pair) {
            match prob.generation {
                RateMode::Variable => terms.push((gen_vars[&pair], -survival / qec)),
                RateMode::Fixed => rhs += survival * prob.graph.rate_key(pair) / qec,
            }
        }

        let kappa = prob.demand.get(&pair).copied().unwrap_or(0.0);
        if kappa > 0.0 {
            match cform {
                ConsumptionForm::PerPairVariable => terms.push((cons_vars[&pair], distill)),
                ConsumptionForm::AlphaScaled => {
                    terms.push((alpha.expect("alpha built"), distill * kappa))
                }
                ConsumptionForm::FixedAtDemand => rhs -= distill * kappa,
            }
        }

        let name = format!("balance_{}_{}", pair.lo(), pair.hi());
        model.add_constraint(name, terms, Relation::Le, rhs)?;
    }

    if let Some(cap) = gen_cap {
        for (pair, &g) in &gen_vars {
            let name = format!("cap_{}_{}", pair.lo(), pair.hi());
            model.add_constraint(name, vec![(g, 1.0), (cap, -1.0)], Relation::Le, 0.0)?;
        }
    }

    Ok(BalanceModel {
        model,
        cform,
        sigma,
        gen_vars,
        cons_vars,
        alpha,
        gen_cap,
    })
}

/// Solved rates in domain terms.
#[derive(Debug, Clone)]
pub struct RateSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub sigma: BTreeMap<(NodeId, PairKey), f64>,
    pub generation: BTreeMap<PairKey, f64>,
    pub consumption: BTreeMap<PairKey, f64>,
    pub alpha: Option<f64>,
}

fn extract(prob: &RateProblem, bm: &BalanceModel, sol: &LpSolution) -> RateSolution {
    if sol.status != LpStatus::Optimal {
        return RateSolution {
            status: sol.status,
            objective: sol.objective,
            sigma: BTreeMap::new(),
            generation: BTreeMap::new(),
            consumption: BTreeMap::new(),
            alpha: None,
        };
    }
    let sigma = bm
        .sigma
        .iter()
        .map(|(&key, &id)| (key, sol.value(id)))
        .collect();
    let generation = match prob.generation {
        RateMode::Variable => bm
            .gen_vars
            .iter()
            .map(|(&pair, &id)| (pair, sol.value(id)))
            .collect(),
        RateMode::Fixed => prob.graph.edges().collect(),
    };
    let alpha = bm.alpha.map(|id| sol.value(id));
    let consumption = match bm.cform {
        ConsumptionForm::PerPairVariable => bm
            .cons_vars
            .iter()
            .map(|(&pair, &id)| (pair, sol.value(id)))
            .collect(),
        ConsumptionForm::FixedAtDemand => prob.positive_demand().collect(),
        ConsumptionForm::AlphaScaled => {
            let a = alpha.unwrap_or(0.0);
            prob.positive_demand().map(|(p, k)| (p, a * k)).collect()
        }
    };
    RateSolution {
        status: sol.status,
        objective: sol.objective,
        sigma,
        generation,
        consumption,
        alpha,
    }
}

/// The objective menu for [`RateProblem`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateObjective {
    MaxTotalConsumption,
    MaxAlpha,
    MinTotalGeneration,
    MinMaxGeneration,
}

fn require_gen_var_cons_fixed(prob: &RateProblem, what: &str) -> Result<(), LpError> {
    if prob.generation != RateMode::Variable || prob.consumption != RateMode::Fixed {
        return Err(LpError::InvalidProblem(format!(
            "{what} needs generation variable and consumption fixed"
        )));
    }
    Ok(())
}

/// Builds the balance program with `objective` already installed.
pub fn build_objective_model(
    prob: &RateProblem,
    objective: RateObjective,
) -> Result<BalanceModel, LpError> {
    match objective {
        RateObjective::MaxTotalConsumption => {
            if prob.consumption != RateMode::Variable {
                return Err(LpError::InvalidProblem(
                    "maximizing consumption needs consumption in variable mode".into(),
                ));
            }
            let mut bm = build_model(prob, ConsumptionForm::PerPairVariable, false)?;
            let terms = bm.cons_vars.values().map(|&id| (id, 1.0)).collect();
            bm.model.set_objective(Sense::Maximize, terms)?;
            Ok(bm)
        }
        RateObjective::MaxAlpha => {
            if prob.positive_demand().next().is_none() {
                return Err(LpError::DegenerateDemand);
            }
            let mut bm = build_model(prob, ConsumptionForm::AlphaScaled, false)?;
            let alpha = bm.alpha.expect("alpha variable built");
            bm.model
                .set_objective(Sense::Maximize, vec![(alpha, 1.0)])?;
            Ok(bm)
        }
        RateObjective::MinTotalGeneration => {
            require_gen_var_cons_fixed(prob, "minimizing total generation")?;
            let mut bm = build_model(prob, ConsumptionForm::FixedAtDemand, false)?;
            let terms = bm.gen_vars.values().map(|&id| (id, 1.0)).collect();
            bm.model.set_objective(Sense::Minimize, terms)?;
            Ok(bm)
        }
        RateObjective::MinMaxGeneration => {
            require_gen_var_cons_fixed(prob, "minimizing the maximum generation rate")?;
            let mut bm = build_model(prob, ConsumptionForm::FixedAtDemand, true)?;
            let cap = bm.gen_cap.expect("cap variable built");
            bm.model.set_objective(Sense::Minimize, vec![(cap, 1.0)])?;
            Ok(bm)
        }
    }
}

/// Builds and solves `prob` under `objective`.
pub fn solve_objective(
    prob: &RateProblem,
    objective: RateObjective,
) -> Result<RateSolution, LpError> {
    let bm = build_objective_model(prob, objective)?;
    let sol = simplex_solve(&bm.model)?;
    Ok(extract(prob, &bm, &sol))
}

/// Maximize total consumption `sum c(x,y)` subject to balance.
pub fn solve_max_total_consumption(prob: &RateProblem) -> Result<RateSolution, LpError> {
    solve_objective(prob, RateObjective::MaxTotalConsumption)
}

/// Maximize the single scaling factor `alpha` with `c = alpha * kappa`.
pub fn solve_max_alpha(prob: &RateProblem) -> Result<RateSolution, LpError> {
    solve_objective(prob, RateObjective::MaxAlpha)
}

/// Minimize total generation `sum g(x,y)` sustaining the fixed demand.
pub fn solve_min_total_generation(prob: &RateProblem) -> Result<RateSolution, LpError> {
    solve_objective(prob, RateObjective::MinTotalGeneration)
}

/// Minimize the maximum per-edge generation rate sustaining the fixed
/// demand.
pub fn solve_min_max_generation(prob: &RateProblem) -> Result<RateSolution, LpError> {
    solve_objective(prob, RateObjective::MinMaxGeneration)
}

/// Phase-1 objective of the lexicographic scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexPhase1 {
    MaxTotalConsumption,
    MaxAlpha,
}

/// Lexicographic solve: first maximize consumption, then fix the
/// achieved consumption rates and minimize total generation under them.
pub fn solve_lexicographic(
    prob: &RateProblem,
    phase1: LexPhase1,
) -> Result<(RateSolution, RateSolution), LpError> {
    if prob.generation != RateMode::Variable || prob.consumption != RateMode::Variable {
        return Err(LpError::InvalidProblem(
            "lexicographic solve needs generation and consumption in variable mode".into(),
        ));
    }
    let first = match phase1 {
        LexPhase1::MaxTotalConsumption => solve_max_total_consumption(prob)?,
        LexPhase1::MaxAlpha => solve_max_alpha(prob)?,
    };
    if first.status != LpStatus::Optimal {
        let second = first.clone();
        return Ok((first, second));
    }
    // Tiny negative values are simplex noise; clamp before refixing.
    let fixed_demand: BTreeMap<PairKey, f64> = first
        .consumption
        .iter()
        .map(|(&pair, &c)| (pair, c.max(0.0)))
        .collect();
    let second_prob = RateProblem {
        graph: prob.graph.clone(),
        demand: fixed_demand,
        costs: prob.costs.clone(),
        generation: RateMode::Variable,
        consumption: RateMode::Fixed,
    };
    let second = solve_min_total_generation(&second_prob)?;
    Ok((first, second))
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

    /// Path graph 0-1-2 with both edge rates `rate`.
    fn line_graph(rate: f64) -> GenerationGraph {
        let mut g = GenerationGraph::new(3);
        g.add_edge(nid(0), nid(1), rate).unwrap();
        g.add_edge(nid(1), nid(2), rate).unwrap();
        g
    }

    fn demand(entries: &[(usize, usize, f64)]) -> BTreeMap<PairKey, f64> {
        entries.iter().map(|&(a, b, k)| (pair(a, b), k)).collect()
    }

    const TOL: f64 = 1e-6;

    #[test]
    fn kernel_maximizes_single_bounded_variable() {
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, 3.0).unwrap();
        model
            .set_objective(Sense::Maximize, vec![(x, 1.0)])
            .unwrap();
        let sol = simplex_solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < TOL);
        assert!((sol.value(x) - 3.0).abs() < TOL);
    }

    #[test]
    fn kernel_detects_infeasible_interval() {
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, f64::INFINITY).unwrap();
        model
            .add_constraint("upper", vec![(x, 1.0)], Relation::Le, 1.0)
            .unwrap();
        model
            .add_constraint("lower", vec![(x, 1.0)], Relation::Ge, 2.0)
            .unwrap();
        model
            .set_objective(Sense::Maximize, vec![(x, 1.0)])
            .unwrap();
        let sol = simplex_solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn kernel_detects_unbounded_ray() {
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, f64::INFINITY).unwrap();
        model
            .set_objective(Sense::Maximize, vec![(x, 1.0)])
            .unwrap();
        let sol = simplex_solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn kernel_handles_equality_and_free_variables() {
        // min x + y  s.t.  x + y = 4, x - y = 2, y free.
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, f64::INFINITY).unwrap();
        let y = model
            .add_var("y", f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        model
            .add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 4.0)
            .unwrap();
        model
            .add_constraint("diff", vec![(x, 1.0), (y, -1.0)], Relation::Eq, 2.0)
            .unwrap();
        model
            .set_objective(Sense::Minimize, vec![(x, 1.0), (y, 1.0)])
            .unwrap();
        let sol = simplex_solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value(x) - 3.0).abs() < TOL);
        assert!((sol.value(y) - 1.0).abs() < TOL);
    }

    #[test]
    fn kernel_honors_negative_lower_bounds() {
        let mut model = LpModel::new();
        let x = model.add_var("x", -5.0, 5.0).unwrap();
        model
            .set_objective(Sense::Minimize, vec![(x, 1.0)])
            .unwrap();
        let sol = simplex_solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value(x) + 5.0).abs() < TOL);
    }

    #[test]
    fn three_node_model_has_three_sigma_variables() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap();
        let bm = build_balance_model(&prob).unwrap();
        assert_eq!(bm.sigma_vars().len(), 3);
        // Plus the single consumption variable.
        assert_eq!(bm.model.var_count(), 4);
    }

    #[test]
    fn balance_coefficients_reduce_to_unit_form_at_default_costs() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap();
        let bm = build_balance_model(&prob).unwrap();
        let con = bm
            .model
            .constraints()
            .iter()
            .find(|c| c.name == "balance_0_1")
            .unwrap();
        // Departures at 0 and 1 carry +1, the arrival at 2 carries -1,
        // and the fixed generation rate lands on the rhs.
        let coeff = |name: &str| {
            let id = bm.model.find_var(name).unwrap();
            con.terms
                .iter()
                .find(|(v, _)| *v == id)
                .map(|(_, c)| *c)
                .unwrap_or(0.0)
        };
        assert_eq!(coeff("sigma_0_1_2"), 1.0);
        assert_eq!(coeff("sigma_1_0_2"), 1.0);
        assert_eq!(coeff("sigma_2_0_1"), -1.0);
        assert_eq!(con.rhs, 1.0);
        assert_eq!(con.relation, Relation::Le);
    }

    #[test]
    fn demand_across_components_is_rejected_at_build() {
        let mut graph = GenerationGraph::new(4);
        graph.add_edge(nid(0), nid(1), 1.0).unwrap();
        graph.add_edge(nid(2), nid(3), 1.0).unwrap();
        let prob = RateProblem::new(graph, demand(&[(0, 3, 1.0)]), CostTable::default()).unwrap();
        assert!(matches!(
            build_balance_model(&prob),
            Err(LpError::DisconnectedDemand { .. })
        ));
    }

    #[test]
    fn line_max_consumption_saturates_the_relay() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap();
        let sol = solve_max_total_consumption(&prob).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < TOL);
        assert!((sol.consumption[&pair(0, 2)] - 1.0).abs() < TOL);
        assert!((sol.sigma[&(nid(1), pair(0, 2))] - 1.0).abs() < TOL);
    }

    #[test]
    fn line_max_consumption_with_distill_two() {
        let costs = CostTable::uniform_distill(2).unwrap();
        let prob = RateProblem::new(line_graph(1.0), demand(&[(0, 2, 10.0)]), costs).unwrap();
        let sol = solve_max_total_consumption(&prob).unwrap();
        assert!((sol.objective - 0.25).abs() < TOL);
        assert!((sol.sigma[&(nid(1), pair(0, 2))] - 0.5).abs() < TOL);
    }

    #[test]
    fn four_cycle_max_consumption_uses_both_relays() {
        let prob = RateProblem::new(
            build_cycle(4).unwrap(),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap();
        let sol = solve_max_total_consumption(&prob).unwrap();
        assert!((sol.objective - 2.0).abs() < TOL);
        let relay_total = sol.sigma[&(nid(1), pair(0, 2))] + sol.sigma[&(nid(3), pair(0, 2))];
        assert!((relay_total - 2.0).abs() < TOL);
    }

    #[test]
    fn alpha_scales_demand_to_capacity() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 2.0)]),
            CostTable::default(),
        )
        .unwrap();
        let sol = solve_max_alpha(&prob).unwrap();
        assert!((sol.alpha.unwrap() - 0.5).abs() < TOL);
        assert!((sol.consumption[&pair(0, 2)] - 1.0).abs() < TOL);
    }

    #[test]
    fn alpha_caps_at_one_when_demand_is_below_capacity() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 0.5)]),
            CostTable::default(),
        )
        .unwrap();
        let sol = solve_max_alpha(&prob).unwrap();
        assert!((sol.alpha.unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn alpha_rejects_zero_demand() {
        let prob =
            RateProblem::new(line_graph(1.0), BTreeMap::new(), CostTable::default()).unwrap();
        assert!(matches!(
            solve_max_alpha(&prob),
            Err(LpError::DegenerateDemand)
        ));
    }

    #[test]
    fn min_generation_covers_the_relay_path() {
        let prob = RateProblem::new(
            line_graph(5.0),
            demand(&[(0, 2, 1.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Fixed);
        let sol = solve_min_total_generation(&prob).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < TOL);
        assert!((sol.generation[&pair(0, 1)] - 1.0).abs() < TOL);
        assert!((sol.generation[&pair(1, 2)] - 1.0).abs() < TOL);
    }

    #[test]
    fn min_generation_is_zero_without_demand() {
        let prob = RateProblem::new(line_graph(5.0), BTreeMap::new(), CostTable::default())
            .unwrap()
            .with_generation(RateMode::Variable)
            .with_consumption(RateMode::Fixed);
        let sol = solve_min_total_generation(&prob).unwrap();
        assert!(sol.objective.abs() < TOL);
    }

    #[test]
    fn min_generation_reports_infeasible_demand() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Fixed);
        let sol = solve_min_total_generation(&prob).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn min_max_generation_on_the_line() {
        let prob = RateProblem::new(
            line_graph(5.0),
            demand(&[(0, 2, 1.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Fixed);
        let sol = solve_min_max_generation(&prob).unwrap();
        assert!((sol.objective - 1.0).abs() < TOL);
    }

    #[test]
    fn min_max_generation_splits_across_the_cycle() {
        let prob = RateProblem::new(
            build_cycle(4).unwrap(),
            demand(&[(0, 2, 1.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Fixed);
        let sol = solve_min_max_generation(&prob).unwrap();
        assert!((sol.objective - 0.5).abs() < TOL);
    }

    #[test]
    fn min_max_generation_is_zero_without_demand() {
        let prob = RateProblem::new(line_graph(1.0), BTreeMap::new(), CostTable::default())
            .unwrap()
            .with_generation(RateMode::Variable)
            .with_consumption(RateMode::Fixed);
        let sol = solve_min_max_generation(&prob).unwrap();
        assert!(sol.objective.abs() < TOL);
    }

    #[test]
    fn lexicographic_line_then_minimal_generation() {
        let prob = RateProblem::new(
            line_graph(1.0),
            demand(&[(0, 2, 10.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Variable);
        let (phase1, phase2) = solve_lexicographic(&prob, LexPhase1::MaxTotalConsumption).unwrap();
        assert!((phase1.objective - 1.0).abs() < TOL);
        assert!((phase2.objective - 2.0).abs() < TOL);
    }

    #[test]
    fn lexicographic_four_cycle() {
        let prob = RateProblem::new(
            build_cycle(4).unwrap(),
            demand(&[(0, 2, 2.0)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Variable);
        let (phase1, phase2) = solve_lexicographic(&prob, LexPhase1::MaxTotalConsumption).unwrap();
        assert!((phase1.objective - 2.0).abs() < TOL);
        assert!((phase2.objective - 4.0).abs() < TOL);
    }

    #[test]
    fn lexicographic_phase_two_is_consistent_with_phase_one() {
        let prob = RateProblem::new(
            build_cycle(4).unwrap(),
            demand(&[(0, 2, 2.0), (1, 3, 0.5)]),
            CostTable::default(),
        )
        .unwrap()
        .with_generation(RateMode::Variable)
        .with_consumption(RateMode::Variable);
        let (phase1, phase2) = solve_lexicographic(&prob, LexPhase1::MaxTotalConsumption).unwrap();
        assert_eq!(phase2.status, LpStatus::Optimal);
        // Phase-2 generation stays within the per-edge caps.
        for (pair, &g) in &phase2.generation {
            assert!(g <= prob.graph.rate_key(*pair) + TOL);
        }
        // Re-running phase 1 with the phase-2 generation rates pinned as
        // the new (fixed) rates reproduces the phase-1 consumption.
        let mut pinned = GenerationGraph::new(4);
        for (pair, &g) in &phase2.generation {
            if g > 0.0 {
                pinned.add_edge(pair.lo(), pair.hi(), g).unwrap();
            }
        }
        let rerun = RateProblem::new(pinned, prob.demand.clone(), CostTable::default()).unwrap();
        let sol = solve_max_total_consumption(&rerun).unwrap();
        assert!((sol.objective - phase1.objective).abs() < TOL);
    }

    #[test]
    fn lexicographic_zero_demand_is_all_zero() {
        let prob = RateProblem::new(line_graph(1.0), BTreeMap::new(), CostTable::default())
            .unwrap()
            .with_generation(RateMode::Variable)
            .with_consumption(RateMode::Variable);
        let (phase1, phase2) = solve_lexicographic(&prob, LexPhase1::MaxTotalConsumption).unwrap();
        assert!(phase1.objective.abs() < TOL);
        assert!(phase2.objective.abs() < TOL);
    }

    #[test]
    fn max_consumption_scales_linearly_with_rates() {
        // LP homogeneity: scaling g and kappa by lambda scales the
        // optimum by lambda.
        for lambda in [2.0, 10.0] {
            let base = RateProblem::new(
                line_graph(1.0),
                demand(&[(0, 2, 10.0)]),
                CostTable::default(),
            )
            .unwrap();
            let scaled = RateProblem::new(
                line_graph(lambda),
                demand(&[(0, 2, 10.0 * lambda)]),
                CostTable::default(),
            )
            .unwrap();
            let a = solve_max_total_consumption(&base).unwrap();
            let b = solve_max_total_consumption(&scaled).unwrap();
            assert!((b.objective - lambda * a.objective).abs() < TOL);
        }
    }
}
