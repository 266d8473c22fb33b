//! Pulling structured content out of free-form model responses.

use crate::geometry::mmcd;
use crate::shape::{Part, Vec3};
use crate::shapescript::{parse_expr_masked, Expr, ExprKind, Literal, UnOp};

/// Body of the first fenced block tagged `lang` (case-insensitive). For
/// `shapescript`, the tags `ss` and `rust` are accepted too. Falls back to the
/// first untagged block.
pub fn code_block(text: &str, lang: &str) -> Option<String> {
    let accepts = |tag: &str| {
        let tag = tag.trim().to_ascii_lowercase();
        tag == lang || (lang == "shapescript" && (tag == "ss" || tag == "rust"))
    };
    let mut blocks: Vec<(String, String)> = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(tag) = trimmed.strip_prefix("```") {
            match current.take() {
                Some((t, body)) => blocks.push((t, body.join("\n"))),
                None => current = Some((tag.to_string(), Vec::new())),
            }
        } else if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    if let Some(b) = blocks.iter().find(|(t, _)| accepts(t)) {
        return Some(b.1.clone());
    }
    blocks
        .into_iter()
        .find(|(t, _)| t.trim().is_empty())
        .map(|(_, b)| b)
}

/// ShapeScript source of a response: its shapescript block, or the whole
/// text when there is no fence at all.
pub fn script_of(text: &str) -> String {
    code_block(text, "shapescript").unwrap_or_else(|| {
        if text.contains("```") {
            String::new()
        } else {
            text.to_string()
        }
    })
}

/// Constant literal of an argument expression; `Some(None)` is `?`. Bare
/// identifiers read as enum values.
pub fn literal_of(e: &Expr) -> Option<Option<Literal>> {
    Some(Some(match &e.kind {
        ExprKind::Masked => return Some(None),
        ExprKind::Int(i) => Literal::Int(*i),
        ExprKind::Float(v) => Literal::Float(*v),
        ExprKind::Bool(b) => Literal::Bool(*b),
        ExprKind::Str(s) => Literal::Str(s.clone()),
        ExprKind::Var(v) => Literal::Str(v.clone()),
        ExprKind::Unary(UnOp::Neg, inner) => match &inner.kind {
            ExprKind::Int(i) => Literal::Int(-*i),
            ExprKind::Float(v) => Literal::Float(-*v),
            _ => return None,
        },
        _ => return None,
    }))
}

fn number_of(e: &Expr) -> Option<f64> {
    match literal_of(e)?? {
        Literal::Int(i) => Some(i as f64),
        Literal::Float(v) => Some(v),
        _ => None,
    }
}

/// `index: value, value, ...` lines of a ```params block; indices are 1-based
/// as printed in the prompt. Lines that do not parse are skipped.
pub fn params_block(text: &str) -> Vec<(usize, Vec<Option<Literal>>)> {
    let Some(block) = code_block(text, "params") else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for line in block.lines() {
        let Some((idx, rest)) = line.split_once(':') else {
            continue;
        };
        let Ok(idx) = idx.trim().parse::<usize>() else {
            continue;
        };
        let Ok(list) = parse_expr_masked(&format!("[{}]", rest.trim())) else {
            continue;
        };
        let ExprKind::List(items) = &list.kind else {
            continue;
        };
        let vals: Option<Vec<Option<Literal>>> = items.iter().map(literal_of).collect();
        if let Some(vals) = vals {
            out.push((idx, vals));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedApplication {
    pub fn_name: String,
    pub parts: Vec<Part>,
    pub args: Vec<Option<Literal>>,
}

fn part_of(e: &Expr) -> Result<Part, String> {
    match &e.kind {
        ExprKind::Call(name, args) if name == "part" && args.len() == 6 => {
            let v: Option<Vec<f64>> = args.iter().map(number_of).collect();
            let v = v.ok_or("part arguments must be numbers")?;
            let p = Part::unlabeled(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]));
            if !p.is_valid() {
                return Err("part with non-positive dimensions".into());
            }
            Ok(p)
        }
        _ => Err("group_parts expects part(w, h, d, x, y, z) entries".into()),
    }
}

/// One application line: `fn(group_parts([part(...), ...]), arg, ...)`.
pub fn application_line(line: &str) -> Result<ParsedApplication, String> {
    let line = line
        .split("//")
        .next()
        .unwrap_or("")
        .trim()
        .trim_end_matches(';');
    let e = parse_expr_masked(line).map_err(|e| e.to_string())?;
    let ExprKind::Call(fn_name, args) = &e.kind else {
        return Err("not a call".into());
    };
    let (first, rest) = args.split_first().ok_or("call without a frame")?;
    let ExprKind::Call(g, gargs) = &first.kind else {
        return Err("first argument must be group_parts(...)".into());
    };
    if g != "group_parts" {
        return Err("first argument must be group_parts(...)".into());
    }
    let items: Vec<&Expr> = match gargs.as_slice() {
        [one] => match &one.kind {
            ExprKind::List(items) => items.iter().collect(),
            _ => vec![one],
        },
        many => many.iter().collect(),
    };
    let parts = items
        .into_iter()
        .map(part_of)
        .collect::<Result<Vec<_>, _>>()?;
    if parts.is_empty() {
        return Err("empty group".into());
    }
    let args = rest
        .iter()
        .map(|a| literal_of(a).ok_or_else(|| "arguments must be literals or `?`".to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedApplication {
        fn_name: fn_name.clone(),
        parts,
        args,
    })
}

/// Map referenced boxes to shape part indices. Each reference takes the
/// nearest part within `tol` (mmcd); it is ambiguous when a second part is
/// within `tol` and less than twice as far, or when two references land on
/// the same part.
pub fn resolve_group(refs: &[Part], shape: &[Part], tol: f64) -> Result<Vec<usize>, String> {
    let mut out = Vec::with_capacity(refs.len());
    for (ri, r) in refs.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = shape
            .iter()
            .enumerate()
            .map(|(i, p)| (mmcd(r, p), i))
            .filter(|(d, _)| *d <= tol)
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match near.as_slice() {
            [] => return Err(format!("referenced part {} matches no shape part", ri + 1)),
            [(d0, _), (d1, _), ..] if *d1 < 2.0 * *d0 => {
                return Err(format!("referenced part {} is ambiguous", ri + 1))
            }
            [(_, i), ..] => {
                if out.contains(i) {
                    return Err(format!("shape part {i} referenced twice"));
                }
                out.push(*i);
            }
        }
    }
    Ok(out)
}
