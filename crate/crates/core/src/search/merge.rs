use std::collections::HashSet;

use super::objective_of_parts;
use crate::config::PipelineConfig;
use crate::geometry::{min_cost_assignment, mmcd};
use crate::interpreter::{execute_program, ExecLimits};
use crate::shape::Part;
use crate::shapescript::{Library, ProgramStmt, ShapeProgram};

/// Optimal partial matching between two part lists of any sizes, as
/// `(index in a, index in b)` pairs.
fn assign(a: &[Part], b: &[Part]) -> Vec<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len() <= b.len() {
        let cost: Vec<Vec<f64>> = a
            .iter()
            .map(|p| b.iter().map(|q| mmcd(p, q)).collect())
            .collect();
        min_cost_assignment(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = b
            .iter()
            .map(|q| a.iter().map(|p| mmcd(p, q)).collect())
            .collect();
        min_cost_assignment(&cost)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect()
    }
}

/// Try splicing each library call of `candidate` into `best`.
///
/// A call's outputs are matched to the target parts they explain; the
/// statements of the current program matched to those same target parts are
/// replaced by the call. An edit is kept only when the objective strictly
/// drops, so the result never scores worse than `best`.
pub fn merge_improve(
    best: &ShapeProgram,
    candidate: &ShapeProgram,
    target: &[Part],
    lib: &Library,
    cfg: &PipelineConfig,
) -> ShapeProgram {
    let limits = ExecLimits::default();
    let Ok(mut cur_ex) = execute_program(lib, best, &limits) else {
        return best.clone();
    };
    let mut cur = best.clone();
    let mut cur_total = objective_of_parts(&cur, &cur_ex.parts, target, cfg).total;

    for stmt in &candidate.statements {
        if !matches!(stmt, ProgramStmt::Call { .. }) || cur.statements.contains(stmt) {
            continue;
        }
        let single = ShapeProgram::new(vec![stmt.clone()]);
        let Ok(call_ex) = execute_program(lib, &single, &limits) else {
            continue;
        };
        if call_ex.parts.is_empty() || call_ex.parts.len() > target.len() {
            continue;
        }
        let explained: HashSet<usize> = assign(&call_ex.parts, target)
            .into_iter()
            .map(|(_, t)| t)
            .collect();
        let drop: HashSet<usize> = assign(&cur_ex.parts, target)
            .into_iter()
            .filter(|(_, t)| explained.contains(t))
            .map(|(p, _)| cur_ex.provenance[p].statement_index)
            .collect();

        let insert_at = drop.iter().min().copied().unwrap_or(cur.statements.len());
        let mut statements = Vec::with_capacity(cur.statements.len() + 1);
        for (i, s) in cur.statements.iter().enumerate() {
            if i == insert_at {
                statements.push(stmt.clone());
            }
            if !drop.contains(&i) {
                statements.push(s.clone());
            }
        }
        if insert_at == cur.statements.len() {
            statements.push(stmt.clone());
        }
        let trial = ShapeProgram::new(statements);
        let Ok(trial_ex) = execute_program(lib, &trial, &limits) else {
            continue;
        };
        let total = objective_of_parts(&trial, &trial_ex.parts, target, cfg).total;
        if total < cur_total {
            cur = trial;
            cur_ex = trial_ex;
            cur_total = total;
        }
    }
    cur
}
