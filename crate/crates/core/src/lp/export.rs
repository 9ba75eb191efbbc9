//! LP-format text output (CPLEX LP file dialect).
//!
//! The writer is deliberately canonical: terms in declaration order,
//! shortest float formatting, default bounds omitted. A given model
//! always serializes to the same bytes.

use std::fmt::Write;

use super::{LpModel, Sense, VarId};

fn push_terms(out: &mut String, model: &LpModel, terms: &[(VarId, f64)]) {
    for (i, &(var, coeff)) in terms.iter().enumerate() {
        let name = model.var_name(var);
        if i == 0 {
            if coeff < 0.0 {
                let _ = write!(out, "- {} {}", fmt_num(-coeff), name);
            } else {
                let _ = write!(out, "{} {}", fmt_num(coeff), name);
            }
        } else if coeff < 0.0 {
            let _ = write!(out, " - {} {}", fmt_num(-coeff), name);
        } else {
            let _ = write!(out, " + {} {}", fmt_num(coeff), name);
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Renders `model` as LP-format text with `Maximize`/`Minimize`,
/// `Subject To`, `Bounds`, and `End` sections.
pub fn export_lp_text(model: &LpModel) -> String {
    let mut out = String::new();
    out.push_str(match model.objective().sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    if !model.objective().terms.is_empty() {
        out.push(' ');
        push_terms(&mut out, model, &model.objective().terms);
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for con in model.constraints() {
        let _ = write!(out, " {}: ", con.name);
        if con.terms.is_empty() {
            // Constant-only constraint; anchor it on some variable so the
            // line stays parseable.
            if let Some(var) = model.vars().first() {
                let _ = write!(out, "0 {}", var.name);
            } else {
                out.push('0');
            }
        } else {
            push_terms(&mut out, model, &con.terms);
        }
        let _ = writeln!(out, " {} {}", con.relation, fmt_num(con.rhs));
    }

    out.push_str("Bounds\n");
    for var in model.vars() {
        let (lo, hi) = (var.lower, var.upper);
        if lo == 0.0 && hi == f64::INFINITY {
            continue; // LP-format default
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {} free", var.name);
        } else if lo == 0.0 {
            let _ = writeln!(out, " {} <= {}", var.name, fmt_num(hi));
        } else if hi == f64::INFINITY {
            let _ = writeln!(out, " {} >= {}", var.name, fmt_num(lo));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(lo), var.name, fmt_num(hi));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{LpModel, Relation, Sense};
    use super::*;

    #[test]
    fn single_bounded_variable_layout() {
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, 3.0).unwrap();
        model
            .set_objective(Sense::Maximize, vec![(x, 1.0)])
            .unwrap();
        let text = export_lp_text(&model);
        assert_eq!(
            text,
            "Maximize\n obj: 1 x\nSubject To\nBounds\n x <= 3\nEnd\n"
        );
    }

    #[test]
    fn constraint_signs_and_relations() {
        let mut model = LpModel::new();
        let x = model.add_var("x", 0.0, f64::INFINITY).unwrap();
        let y = model.add_var("y", -1.0, 2.5).unwrap();
        model
            .add_constraint("mix", vec![(x, 2.0), (y, -0.5)], Relation::Ge, -1.0)
            .unwrap();
        model
            .add_constraint("tie", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 4.0)
            .unwrap();
        model
            .set_objective(Sense::Minimize, vec![(x, 1.0), (y, -3.0)])
            .unwrap();
        let text = export_lp_text(&model);
        assert!(text.starts_with("Minimize\n obj: 1 x - 3 y\n"));
        assert!(text.contains(" mix: 2 x - 0.5 y >= -1\n"));
        assert!(text.contains(" tie: 1 x + 1 y = 4\n"));
        assert!(text.contains(" -1 <= y <= 2.5\n"));
        assert!(!text.contains(" x <= ")); // default bounds stay silent
    }

    #[test]
    fn export_is_byte_stable() {
        let build = || {
            let mut model = LpModel::new();
            let x = model.add_var("x", 0.0, 7.0).unwrap();
            let y = model.add_var("y", 0.0, f64::INFINITY).unwrap();
            model
                .add_constraint("row", vec![(x, 1.0), (y, 2.0)], Relation::Le, 5.0)
                .unwrap();
            model
                .set_objective(Sense::Maximize, vec![(x, 1.0), (y, 1.0)])
                .unwrap();
            export_lp_text(&model)
        };
        assert_eq!(build(), build());
    }
}
