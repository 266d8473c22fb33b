//! Canonical ShapeScript printer.
//!
//! Output is a pure function of the syntax tree: four-space indentation, one
//! statement per line, minimal parentheses, and every float rounded to six
//! significant digits.

use std::fmt::Write;

use super::ast::*;
use crate::shape::CoordFrame;

/// Round to six significant digits, the precision every printed float carries.
pub fn quantize(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

pub fn quantize_frame(f: &CoordFrame) -> CoordFrame {
    let v = f.to_whd_xyz().map(quantize);
    CoordFrame::from_whd_xyz(v)
}

pub fn quantize_literal(l: &Literal) -> Literal {
    match l {
        Literal::Float(v) => Literal::Float(quantize(*v)),
        other => other.clone(),
    }
}

pub fn format_float(v: f64) -> String {
    let q = quantize(v);
    let mut s = format!("{q}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn type_text(ty: &ParamType) -> String {
    match ty {
        ParamType::Enum(opts) => format!("enum({})", opts.join(", ")),
        other => other.name().to_string(),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn print_doc(out: &mut String, doc: &DocString, params: &[Param]) {
    if !doc.description.is_empty() {
        let _ = writeln!(out, "/// @description {}", one_line(&doc.description));
    }
    if !doc.parts_spec.is_empty() {
        let _ = writeln!(out, "/// @parts {}", one_line(&doc.parts_spec));
    }
    if !doc.valid_options.is_empty() {
        let opts: Vec<String> = doc.valid_options.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "/// @valid_options [{}]", opts.join(", "));
    }
    let mut seen = Vec::new();
    for p in params {
        if let Some(text) = doc.parameters_spec.get(&p.name) {
            let _ = writeln!(out, "/// @param {} {}", p.name, one_line(text));
            seen.push(p.name.as_str());
        }
    }
    for (name, text) in &doc.parameters_spec {
        if !seen.contains(&name.as_str()) {
            let _ = writeln!(out, "/// @param {} {}", name, one_line(text));
        }
    }
}

fn trim_doc_trailing(out: &mut String) {
    // `@param x` with empty text leaves a trailing space
    let fixed: Vec<&str> = out.lines().map(str::trim_end).collect();
    let mut s = fixed.join("\n");
    s.push('\n');
    *out = s;
}

pub fn print_function(f: &LibraryFunction) -> String {
    let mut out = String::new();
    print_doc(&mut out, &f.doc, &f.params);
    let mut params: Vec<String> = Vec::new();
    if let Some(cf) = &f.frame_param {
        params.push(format!("{cf}: {FRAME_TYPE}"));
    }
    params.extend(
        f.params
            .iter()
            .map(|p| format!("{}: {}", p.name, type_text(&p.ty))),
    );
    let _ = write!(
        out,
        "fn {}({}) -> {}",
        f.name,
        params.join(", "),
        f.return_type
    );
    match &f.body {
        None => out.push_str(";\n"),
        Some(body) => {
            out.push_str(" {\n");
            print_block(&mut out, body, 1);
            out.push_str("}\n");
        }
    }
    trim_doc_trailing(&mut out);
    out
}

pub fn print_library(lib: &Library) -> String {
    lib.functions
        .values()
        .map(print_function)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn print_sampler(s: &Sampler) -> String {
    let mut out = format!(
        "fn {}({}: {FRAME_TYPE}) -> {PART_LIST_TYPE} {{\n",
        s.name, s.frame_param
    );
    print_block(&mut out, &s.body, 1);
    out.push_str("}\n");
    out
}

pub fn print_samplers(samplers: &[Sampler]) -> String {
    samplers
        .iter()
        .map(print_sampler)
        .collect::<Vec<_>>()
        .join("\n")
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, block: &Block, level: usize) {
    for stmt in block {
        print_stmt(out, stmt, level);
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    indent(out, level);
    match stmt {
        Stmt::Let { name, value, .. } => {
            let _ = writeln!(out, "let {name} = {};", print_expr(value));
        }
        Stmt::Assign { name, value, .. } => {
            let _ = writeln!(out, "{name} = {};", print_expr(value));
        }
        Stmt::For {
            var,
            start,
            end,
            body,
            ..
        } => {
            let _ = writeln!(
                out,
                "for {var} in {}..{} {{",
                print_expr(start),
                print_expr(end)
            );
            print_block(out, body, level + 1);
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::If { .. } => {
            print_if(out, stmt, level);
            out.push('\n');
        }
        Stmt::Return { value, .. } => {
            let _ = writeln!(out, "return {};", print_expr(value));
        }
        Stmt::Expr { expr, .. } => {
            let _ = writeln!(out, "{};", print_expr(expr));
        }
    }
}

// Prints an if-chain without the trailing newline; `else if` is used when the
// else block is exactly one nested `if`.
fn print_if(out: &mut String, stmt: &Stmt, level: usize) {
    if let Stmt::If {
        cond,
        then_block,
        else_block,
        ..
    } = stmt
    {
        let _ = writeln!(out, "if {} {{", print_expr(cond));
        print_block(out, then_block, level + 1);
        indent(out, level);
        out.push('}');
        if let Some(else_block) = else_block {
            match else_block.as_slice() {
                [nested @ Stmt::If { .. }] => {
                    out.push_str(" else ");
                    print_if(out, nested, level);
                }
                _ => {
                    out.push_str(" else {\n");
                    print_block(out, else_block, level + 1);
                    indent(out, level);
                    out.push('}');
                }
            }
        }
    }
}

const UNARY_PREC: u8 = 6;
const POSTFIX_PREC: u8 = 7;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(_, _) => UNARY_PREC,
        _ => POSTFIX_PREC,
    }
}

fn is_numeric_literal(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Int(_) | ExprKind::Float(_))
}

fn wrap(e: &Expr, needs: bool) -> String {
    if needs {
        format!("({})", print_expr(e))
    } else {
        print_expr(e)
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Float(v) => format_float(*v),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Str(s) => quote(s),
        ExprKind::Masked => "?".to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Field(base, field) => {
            format!("{}.{field}", wrap(base, expr_prec(base) < POSTFIX_PREC))
        }
        ExprKind::Index(base, idx) => {
            format!(
                "{}[{}]",
                wrap(base, expr_prec(base) < POSTFIX_PREC),
                print_expr(idx)
            )
        }
        ExprKind::List(items) => {
            let items: Vec<String> = items.iter().map(print_expr).collect();
            format!("[{}]", items.join(", "))
        }
        ExprKind::Unary(op, inner) => {
            // a bare numeric literal after `-` would re-lex as a signed literal
            let needs =
                expr_prec(inner) < UNARY_PREC || (*op == UnOp::Neg && is_numeric_literal(inner));
            match op {
                UnOp::Neg => format!("-{}", wrap(inner, needs)),
                UnOp::Not => format!("not {}", wrap(inner, needs)),
            }
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                wrap(lhs, expr_prec(lhs) < p),
                op.symbol(),
                wrap(rhs, expr_prec(rhs) <= p)
            )
        }
        ExprKind::Call(name, args) => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            format!("{name}({})", args.join(", "))
        }
    }
}

pub fn print_frame(f: &CoordFrame) -> String {
    let v: Vec<String> = f.to_whd_xyz().iter().map(|x| format_float(*x)).collect();
    format!("frame({})", v.join(", "))
}

pub fn print_program_stmt(stmt: &ProgramStmt) -> String {
    match stmt {
        ProgramStmt::Call {
            fn_name,
            frame,
            args,
        } => {
            let mut parts = vec![print_frame(frame)];
            parts.extend(args.iter().map(|a| a.to_string()));
            format!("{fn_name}({});", parts.join(", "))
        }
        ProgramStmt::MakePart { frame, label } => {
            format!("make_part({}, {});", print_frame(frame), quote(label))
        }
    }
}

pub fn print_program(prog: &ShapeProgram) -> String {
    let mut out = String::new();
    for stmt in &prog.statements {
        out.push_str(&print_program_stmt(stmt));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_six_significant_digits() {
        assert_eq!(format_float(0.30000001), "0.3");
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(-2.5), "-2.5");
        assert_eq!(format_float(123456789.0), "123457000.0");
        assert_eq!(format_float(0.000123456789), "0.000123457");
        assert_eq!(format_float(0.0), "0.0");
    }

    #[test]
    fn negated_literal_is_parenthesized() {
        let e = Expr::synthetic(ExprKind::Unary(
            UnOp::Neg,
            Box::new(Expr::synthetic(ExprKind::Int(3))),
        ));
        assert_eq!(print_expr(&e), "-(3)");
    }

    #[test]
    fn right_operand_of_equal_precedence_is_wrapped() {
        let v = |n: &str| Box::new(Expr::synthetic(ExprKind::Var(n.into())));
        let inner = Expr::synthetic(ExprKind::Binary(BinOp::Sub, v("b"), v("c")));
        let e = Expr::synthetic(ExprKind::Binary(BinOp::Sub, v("a"), Box::new(inner)));
        assert_eq!(print_expr(&e), "a - (b - c)");
    }
}
