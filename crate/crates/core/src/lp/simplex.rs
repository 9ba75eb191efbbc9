//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Bounded variables are reduced to the non-negative standard form:
//! finite lower bounds are shifted out, variables bounded only above
//! are mirrored, and doubly-unbounded variables are split into a
//! difference of non-negatives. Finite upper bounds become explicit
//! rows. Phase 1 drives artificial variables to zero; phase 2 runs the
//! caller's objective with artificial columns banned from entering.

use super::{LpError, LpModel, LpSolution, LpStatus, Relation, Sense};

/// Pivot/optimality tolerance.
const TOL: f64 = 1e-9;
/// Post-solve constraint verification tolerance.
const VERIFY_TOL: f64 = 1e-7;

/// How each model variable maps onto non-negative structural columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + u
    Shifted { col: usize, offset: f64 },
    /// x = offset - u
    Mirrored { col: usize, offset: f64 },
    /// x = u_pos - u_neg
    Split { pos: usize, neg: usize },
}

struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    n_cols: usize,
    art_start: usize,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

pub(super) fn solve(model: &LpModel) -> Result<LpSolution, LpError> {
    let (maps, n_structural) = build_var_maps(model);
    let rows = build_rows(model, &maps, n_structural);
    let mut tab = build_tableau(&rows, n_structural);
    let mut budget = 50 * (tab.n_cols + tab.b.len()).max(1);
    let mut iterations = 0usize;

    if tab.art_start < tab.n_cols {
        // Phase 1: maximize minus the artificial sum.
        let mut costs = vec![0.0; tab.n_cols];
        for c in &mut costs[tab.art_start..] {
            *c = -1.0;
        }
        let (mut d, mut z) = reduced_costs(&tab, &costs);
        let all_cols = tab.n_cols;
        match run_simplex(
            &mut tab,
            &mut d,
            &mut z,
            all_cols,
            &mut budget,
            &mut iterations,
        )? {
            LoopEnd::Optimal => {}
            LoopEnd::Unbounded => {
                return Err(LpError::VerificationFailed(
                    "phase-1 objective cannot be unbounded".into(),
                ))
            }
        }
        if z < -TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                values: Vec::new(),
            });
        }
        drive_out_artificials(&mut tab);
    }

    // Phase 2: the caller's objective over structural columns.
    let mut costs = vec![0.0; tab.n_cols];
    let sign = match model.objective().sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    for &(var, coeff) in &model.objective().terms {
        match maps[var.index()] {
            VarMap::Shifted { col, .. } => costs[col] += sign * coeff,
            VarMap::Mirrored { col, .. } => costs[col] -= sign * coeff,
            VarMap::Split { pos, neg } => {
                costs[pos] += sign * coeff;
                costs[neg] -= sign * coeff;
            }
        }
    }
    let (mut d, mut z) = reduced_costs(&tab, &costs);
    let allowed = tab.art_start;
    match run_simplex(
        &mut tab,
        &mut d,
        &mut z,
        allowed,
        &mut budget,
        &mut iterations,
    )? {
        LoopEnd::Unbounded => {
            let objective = match model.objective().sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            };
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective,
                values: Vec::new(),
            })
        }
        LoopEnd::Optimal => {
            let values = extract_values(model, &maps, &tab, n_structural);
            verify(model, &values)?;
            let objective = model
                .objective()
                .terms
                .iter()
                .map(|&(var, coeff)| coeff * values[var.index()])
                .sum();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective,
                values,
            })
        }
    }
}

fn build_var_maps(model: &LpModel) -> (Vec<VarMap>, usize) {
    let mut maps = Vec::with_capacity(model.var_count());
    let mut next = 0usize;
    for var in model.vars() {
        let map = if var.lower.is_finite() {
            let col = next;
            next += 1;
            VarMap::Shifted {
                col,
                offset: var.lower,
            }
        } else if var.upper.is_finite() {
            let col = next;
            next += 1;
            VarMap::Mirrored {
                col,
                offset: var.upper,
            }
        } else {
            let (pos, neg) = (next, next + 1);
            next += 2;
            VarMap::Split { pos, neg }
        };
        maps.push(map);
    }
    (maps, next)
}

fn build_rows(model: &LpModel, maps: &[VarMap], n_structural: usize) -> Vec<Row> {
    let mut rows = Vec::with_capacity(model.constraint_count() + model.var_count());
    for con in model.constraints() {
        let mut coeffs = vec![0.0; n_structural];
        let mut rhs = con.rhs;
        for &(var, coeff) in &con.terms {
            match maps[var.index()] {
                VarMap::Shifted { col, offset } => {
                    coeffs[col] += coeff;
                    rhs -= coeff * offset;
                }
                VarMap::Mirrored { col, offset } => {
                    coeffs[col] -= coeff;
                    rhs -= coeff * offset;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += coeff;
                    coeffs[neg] -= coeff;
                }
            }
        }
        rows.push(Row {
            coeffs,
            relation: con.relation,
            rhs,
        });
    }
    // Finite upper bounds of shifted variables become explicit rows.
    for (var, map) in model.vars().iter().zip(maps) {
        if let VarMap::Shifted { col, offset } = *map {
            if var.upper.is_finite() {
                let mut coeffs = vec![0.0; n_structural];
                coeffs[col] = 1.0;
                rows.push(Row {
                    coeffs,
                    relation: Relation::Le,
                    rhs: var.upper - offset,
                });
            }
        }
    }
    rows
}

fn build_tableau(rows: &[Row], n_structural: usize) -> Tableau {
    let m = rows.len();
    let mut n_slack = 0;
    let mut n_art = 0;
    // A row with negative rhs is negated first, flipping its relation.
    let oriented: Vec<(Vec<f64>, Relation, f64)> = rows
        .iter()
        .map(|row| {
            if row.rhs < 0.0 {
                let coeffs = row.coeffs.iter().map(|c| -c).collect();
                let relation = match row.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (coeffs, relation, -row.rhs)
            } else {
                (row.coeffs.clone(), row.relation, row.rhs)
            }
        })
        .collect();
    for (_, relation, _) in &oriented {
        match relation {
            Relation::Le | Relation::Ge => n_slack += 1,
            Relation::Eq => {}
        }
        match relation {
            Relation::Ge | Relation::Eq => n_art += 1,
            Relation::Le => {}
        }
    }
    let art_start = n_structural + n_slack;
    let n_cols = art_start + n_art;
    let mut a = vec![vec![0.0; n_cols]; m];
    let mut b = vec![0.0; m];
    let mut basis = vec![0usize; m];
    let mut slack_cursor = n_structural;
    let mut art_cursor = art_start;
    for (i, (coeffs, relation, rhs)) in oriented.into_iter().enumerate() {
        a[i][..n_structural].copy_from_slice(&coeffs);
        b[i] = rhs;
        match relation {
            Relation::Le => {
                a[i][slack_cursor] = 1.0;
                basis[i] = slack_cursor;
                slack_cursor += 1;
            }
            Relation::Ge => {
                a[i][slack_cursor] = -1.0;
                slack_cursor += 1;
                a[i][art_cursor] = 1.0;
                basis[i] = art_cursor;
                art_cursor += 1;
            }
            Relation::Eq => {
                a[i][art_cursor] = 1.0;
                basis[i] = art_cursor;
                art_cursor += 1;
            }
        }
    }
    Tableau {
        a,
        b,
        basis,
        n_cols,
        art_start,
    }
}

/// Reduced costs and objective value for the current basis.
fn reduced_costs(tab: &Tableau, costs: &[f64]) -> (Vec<f64>, f64) {
    let mut d = costs.to_vec();
    let mut z = 0.0;
    for (i, &bv) in tab.basis.iter().enumerate() {
        let cb = costs[bv];
        if cb != 0.0 {
            for (dj, &aij) in d.iter_mut().zip(&tab.a[i]) {
                *dj -= cb * aij;
            }
            z += cb * tab.b[i];
        }
    }
    for &bv in &tab.basis {
        d[bv] = 0.0;
    }
    (d, z)
}

/// Bland's rule: entering column is the lowest-index improving one,
/// leaving row breaks ratio ties toward the lowest basic index.
fn run_simplex(
    tab: &mut Tableau,
    d: &mut [f64],
    z: &mut f64,
    enterable_cols: usize,
    budget: &mut usize,
    iterations: &mut usize,
) -> Result<LoopEnd, LpError> {
    loop {
        let entering = (0..enterable_cols).find(|&j| d[j] > TOL);
        let e = match entering {
            Some(e) => e,
            None => return Ok(LoopEnd::Optimal),
        };
        let mut leaving: Option<(f64, usize, usize)> = None;
        for i in 0..tab.b.len() {
            let coeff = tab.a[i][e];
            if coeff > TOL {
                let ratio = tab.b[i] / coeff;
                let candidate = (ratio, tab.basis[i], i);
                leaving = Some(match leaving {
                    None => candidate,
                    Some(best) => {
                        if ratio < best.0 - 1e-12
                            || (ratio <= best.0 + 1e-12 && tab.basis[i] < best.1)
                        {
                            candidate
                        } else {
                            best
                        }
                    }
                });
            }
        }
        let (_, _, r) = match leaving {
            Some(l) => l,
            None => return Ok(LoopEnd::Unbounded),
        };
        if *budget == 0 {
            return Err(LpError::SolverStalled {
                iterations: *iterations,
            });
        }
        *budget -= 1;
        *iterations += 1;
        pivot(tab, r, e);
        let de = d[e];
        for (dj, &arj) in d.iter_mut().zip(&tab.a[r]) {
            *dj -= de * arj;
        }
        d[e] = 0.0;
        *z += de * tab.b[r];
    }
}

fn pivot(tab: &mut Tableau, r: usize, e: usize) {
    let p = tab.a[r][e];
    for v in &mut tab.a[r] {
        *v /= p;
    }
    tab.b[r] /= p;
    tab.a[r][e] = 1.0;
    for i in 0..tab.b.len() {
        if i == r {
            continue;
        }
        let f = tab.a[i][e];
        if f != 0.0 {
            let pivot_row = std::mem::take(&mut tab.a[r]);
            for (v, pv) in tab.a[i].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            tab.a[r] = pivot_row;
            tab.a[i][e] = 0.0;
            tab.b[i] -= f * tab.b[r];
        }
    }
    tab.basis[r] = e;
}

/// Pivots basic artificials onto structural/slack columns where
/// possible. A row whose non-artificial coefficients all vanish is
/// inert: its artificial stays basic at zero and can never change.
fn drive_out_artificials(tab: &mut Tableau) {
    for r in 0..tab.b.len() {
        if tab.basis[r] < tab.art_start {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..tab.art_start {
            let mag = tab.a[r][j].abs();
            if mag > TOL && best.is_none_or(|(_, bm)| mag > bm) {
                best = Some((j, mag));
            }
        }
        if let Some((j, _)) = best {
            pivot(tab, r, j);
        }
    }
}

fn extract_values(
    model: &LpModel,
    maps: &[VarMap],
    tab: &Tableau,
    n_structural: usize,
) -> Vec<f64> {
    let mut u = vec![0.0; n_structural];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n_structural {
            u[bv] = tab.b[i].max(0.0);
        }
    }
    model
        .vars()
        .iter()
        .enumerate()
        .map(|(j, _)| match maps[j] {
            VarMap::Shifted { col, offset } => offset + u[col],
            VarMap::Mirrored { col, offset } => offset - u[col],
            VarMap::Split { pos, neg } => u[pos] - u[neg],
        })
        .collect()
}

fn verify(model: &LpModel, values: &[f64]) -> Result<(), LpError> {
    for (var, &x) in model.vars().iter().zip(values) {
        let tol = VERIFY_TOL * (1.0 + var.lower.abs().min(var.upper.abs()));
        if x < var.lower - tol || x > var.upper + tol {
            return Err(LpError::VerificationFailed(format!(
                "variable {} = {x} violates bounds [{}, {}]",
                var.name, var.lower, var.upper
            )));
        }
    }
    for con in model.constraints() {
        let lhs: f64 = con
            .terms
            .iter()
            .map(|&(var, coeff)| coeff * values[var.index()])
            .sum();
        let tol = VERIFY_TOL * (1.0 + con.rhs.abs());
        let ok = match con.relation {
            Relation::Le => lhs <= con.rhs + tol,
            Relation::Ge => lhs >= con.rhs - tol,
            Relation::Eq => (lhs - con.rhs).abs() <= tol,
        };
        if !ok {
            return Err(LpError::VerificationFailed(format!(
                "constraint {} evaluates to {lhs}, rhs {} ({})",
                con.name, con.rhs, con.relation
            )));
        }
    }
    Ok(())
}
