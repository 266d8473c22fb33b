use std::collections::HashSet;

use rand::seq::index;

use super::{ApplicationProposal, ParamVector, ValidationError};
use crate::config::PipelineConfig;
use crate::interpreter::rng::child_rng;
use crate::shapescript::{quantize, quantize_literal, LibraryFunction, Literal, ParamType};

/// Keep each value unless it lies within `gap` of one already kept;
/// values are visited in the order given.
pub fn dedup_floats(values: &[f64], gap: f64) -> Vec<f64> {
    let mut kept: Vec<f64> = Vec::new();
    for &v in values {
        if kept.iter().all(|k| (k - v).abs() >= gap - 1e-12) {
            kept.push(v);
        }
    }
    kept
}

fn key(v: &[Literal]) -> String {
    v.iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join("\u{1}")
}

/// Candidate grid for one function: every declared enum/bool value, the
/// observed ints, and gap-deduplicated observed floats, crossed. Fully
/// concrete proposed vectors always come first and are never dropped; the
/// rest of the grid is subsampled (seeded) when it exceeds `max_combos`.
pub fn expand_parameter_sets(
    proposals: &[ApplicationProposal],
    f: &LibraryFunction,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<Vec<ParamVector>, ValidationError> {
    if proposals.is_empty() {
        return Err(ValidationError::NoProposals(f.name.clone()));
    }
    let arity = f.params.len();
    let usable = || proposals.iter().filter(move |p| p.args.len() == arity);

    // per-parameter value lists
    let mut axes: Vec<Vec<Literal>> = Vec::with_capacity(arity);
    for (pi, param) in f.params.iter().enumerate() {
        let observed = usable()
            .filter_map(|p| p.args[pi].as_ref())
            .filter_map(|l| param.ty.coerce(l));
        let values = match &param.ty {
            ParamType::Bool => vec![Literal::Bool(false), Literal::Bool(true)],
            ParamType::Enum(opts) => opts.iter().map(|o| Literal::Str(o.clone())).collect(),
            ParamType::Int => {
                let mut seen = HashSet::new();
                observed
                    .filter_map(|l| match l {
                        Literal::Int(i) => seen.insert(i).then_some(Literal::Int(i)),
                        _ => None,
                    })
                    .collect()
            }
            ParamType::Float => {
                let floats: Vec<f64> = observed
                    .filter_map(|l| match l {
                        Literal::Float(v) => Some(quantize(v)),
                        _ => None,
                    })
                    .collect();
                dedup_floats(&floats, cfg.float_gap)
                    .into_iter()
                    .map(Literal::Float)
                    .collect()
            }
        };
        axes.push(values);
    }

    // fully concrete proposals, first-seen order
    let mut out: Vec<ParamVector> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for p in usable() {
        let Some(args) = p.concrete_args() else {
            continue;
        };
        let coerced: Option<Vec<Literal>> = f
            .params
            .iter()
            .zip(&args)
            .map(|(param, a)| param.ty.coerce(a).map(|l| quantize_literal(&l)))
            .collect();
        if let Some(v) = coerced {
            if seen.insert(key(&v)) {
                out.push(ParamVector(v));
            }
        }
    }

    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .unwrap_or(usize::MAX);
    let decode = |mut i: usize| -> Vec<Literal> {
        // mixed radix, last parameter varying fastest
        let mut v = vec![Literal::Bool(false); arity];
        for k in (0..arity).rev() {
            let n = axes[k].len();
            v[k] = axes[k][i % n].clone();
            i /= n;
        }
        v
    };
    let room = cfg.max_combos.saturating_sub(out.len());
    let mut rng = child_rng(seed, &format!("expand:{}", f.name));
    if total <= cfg.max_combos {
        let grid: Vec<Vec<Literal>> = (0..total)
            .map(decode)
            .filter(|v| !seen.contains(&key(v)))
            .collect();
        if grid.len() <= room {
            out.extend(grid.into_iter().map(ParamVector));
        } else {
            // proposals outside the grid pushed us over the cap
            let mut picks = index::sample(&mut rng, grid.len(), room).into_vec();
            picks.sort_unstable();
            out.extend(picks.into_iter().map(|i| ParamVector(grid[i].clone())));
        }
        return Ok(out);
    }
    // sampling `max_combos` grid points leaves at least `room` unseen ones
    let mut picks = index::sample(&mut rng, total, cfg.max_combos).into_vec();
    picks.sort_unstable();
    let mut added = 0;
    for i in picks {
        if added == room {
            break;
        }
        let v = decode(i);
        if seen.insert(key(&v)) {
            out.push(ParamVector(v));
            added += 1;
        }
    }
    Ok(out)
}
