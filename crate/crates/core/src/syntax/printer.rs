//! Pretty-printer producing re-parseable source text.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_source(decls: &[Decl]) -> String {
    let mut out = String::new();
    for (i, d) in decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match d {
            Decl::Function(f) => print_function(&mut out, f),
            Decl::Type(t) => print_type_decl(&mut out, t),
        }
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDecl) {
    let kw = match f.kind {
        FunctionKind::Function => "function",
        FunctionKind::Method => "method",
    };
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{} {}", print_type(&p.ty), p.name.as_deref().unwrap_or("_")))
        .collect();
    write!(out, "{kw} {}({})", f.name, params.join(", ")).unwrap();
    if !f.returns.is_empty() {
        let rets: Vec<String> = f
            .returns
            .iter()
            .map(|r| match &r.name {
                Some(n) => format!("{} {n}", print_type(&r.ty)),
                None => print_type(&r.ty),
            })
            .collect();
        write!(out, " -> ({})", rets.join(", ")).unwrap();
    }
    for r in &f.requires {
        write!(out, "\nrequires {}", print_expr(r)).unwrap();
    }
    for e in &f.ensures {
        write!(out, "\nensures {}", print_expr(e)).unwrap();
    }
    out.push_str(":\n");
    print_block(out, &f.body, 1);
}

fn print_type_decl(out: &mut String, t: &TypeDecl) {
    match &t.binder {
        Some(b) => write!(out, "type {} is ({} {b})", t.name, print_type(&t.ty)).unwrap(),
        None => write!(out, "type {} is {}", t.name, print_type(&t.ty)).unwrap(),
    }
    for w in &t.invariants {
        write!(out, "\nwhere {}", print_expr(w)).unwrap();
    }
    out.push('\n');
}

fn print_block(out: &mut String, body: &[Stmt], depth: usize) {
    if body.is_empty() {
        writeln!(out, "{}skip", INDENT.repeat(depth)).unwrap();
    }
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &s.kind {
        StmtKind::VarDecl { ty, name, init } => match init {
            Some(e) => writeln!(out, "{pad}{} {name} = {}", print_type(ty), print_expr(e)),
            None => writeln!(out, "{pad}{} {name}", print_type(ty)),
        }
        .unwrap(),
        StmtKind::Assign { target, value } => {
            writeln!(out, "{pad}{} = {}", print_expr(target), print_expr(value)).unwrap()
        }
        StmtKind::Return(values) => {
            if values.is_empty() {
                writeln!(out, "{pad}return").unwrap();
            } else {
                let vs: Vec<String> = values.iter().map(print_expr).collect();
                writeln!(out, "{pad}return {}", vs.join(", ")).unwrap();
            }
        }
        StmtKind::If { .. } => print_if(out, s, depth, false),
        StmtKind::While {
            cond,
            invariants,
            body,
        } => {
            write!(out, "{pad}while {}", print_expr(cond)).unwrap();
            for inv in invariants {
                write!(out, " where {}", print_expr(inv)).unwrap();
            }
            out.push_str(":\n");
            print_block(out, body, depth + 1);
        }
        StmtKind::Assert(e) => writeln!(out, "{pad}assert {}", print_expr(e)).unwrap(),
        StmtKind::Expr(e) => writeln!(out, "{pad}{}", print_expr(e)).unwrap(),
        StmtKind::Skip => writeln!(out, "{pad}skip").unwrap(),
        StmtKind::Break => writeln!(out, "{pad}break").unwrap(),
        StmtKind::Continue => writeln!(out, "{pad}continue").unwrap(),
    }
}

fn print_if(out: &mut String, s: &Stmt, depth: usize, chained: bool) {
    let StmtKind::If {
        cond,
        then_branch,
        else_branch,
    } = &s.kind
    else {
        unreachable!()
    };
    let pad = INDENT.repeat(depth);
    if chained {
        writeln!(out, "{pad}else if {}:", print_expr(cond)).unwrap();
    } else {
        writeln!(out, "{pad}if {}:", print_expr(cond)).unwrap();
    }
    print_block(out, then_branch, depth + 1);
    match else_branch.as_slice() {
        [] => {}
        [nested] if matches!(nested.kind, StmtKind::If { .. }) => {
            print_if(out, nested, depth, true)
        }
        body => {
            writeln!(out, "{pad}else:").unwrap();
            print_block(out, body, depth + 1);
        }
    }
}

pub fn print_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Null => "null".into(),
        TypeExpr::Bool => "bool".into(),
        TypeExpr::Int => "int".into(),
        TypeExpr::Named(n) => n.clone(),
        TypeExpr::Array(elem) => match **elem {
            TypeExpr::Union(_) | TypeExpr::Reference(_) => format!("({})[]", print_type(elem)),
            _ => format!("{}[]", print_type(elem)),
        },
        TypeExpr::Record { fields, open } => {
            let mut parts: Vec<String> = fields
                .iter()
                .map(|(n, t)| format!("{} {n}", print_type(t)))
                .collect();
            if *open {
                parts.push("...".into());
            }
            format!("{{{}}}", parts.join(", "))
        }
        TypeExpr::Union(members) => members
            .iter()
            .map(|m| match m {
                TypeExpr::Union(_) => format!("({})", print_type(m)),
                _ => print_type(m),
            })
            .collect::<Vec<_>>()
            .join("|"),
        TypeExpr::Reference(inner) => match **inner {
            TypeExpr::Union(_) => format!("&({})", print_type(inner)),
            _ => format!("&{}", print_type(inner)),
        },
        TypeExpr::Lambda { params, returns } => {
            let ps: Vec<String> = params.iter().map(print_type).collect();
            let rs: Vec<String> = returns.iter().map(print_type).collect();
            if returns.is_empty() {
                format!("function({})", ps.join(","))
            } else {
                format!("function({})->({})", ps.join(","), rs.join(","))
            }
        }
    }
}

const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;
const PREC_ATOM: u8 = 9;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Range(..) => RANGE_PRECEDENCE,
        ExprKind::Unary(..) | ExprKind::Deref(_) | ExprKind::New(_) | ExprKind::Cast(..) => {
            PREC_UNARY
        }
        ExprKind::Int(v) if v.sign() == num_bigint::Sign::Minus => PREC_UNARY,
        ExprKind::Index(..) | ExprKind::Field(..) => PREC_POSTFIX,
        _ => PREC_ATOM,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    if precedence(e) < min {
        out.push('(');
        expr(out, e, 0);
        out.push(')');
        return;
    }
    match &e.kind {
        ExprKind::Null => out.push_str("null"),
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Unary(op, a) => {
            out.push(match op {
                UnaryOp::Not => '!',
                UnaryOp::Neg => '-',
            });
            expr(out, a, PREC_UNARY);
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            let (lmin, rmin) = if *op == BinaryOp::Implies {
                (p + 1, p)
            } else {
                (p, p + 1)
            };
            expr(out, a, lmin);
            write!(out, " {} ", op.symbol()).unwrap();
            expr(out, b, rmin);
        }
        ExprKind::Range(a, b) => {
            expr(out, a, RANGE_PRECEDENCE);
            out.push_str("..");
            expr(out, b, RANGE_PRECEDENCE + 1);
        }
        ExprKind::ArrayLiteral(items) => {
            out.push('[');
            list(out, items);
            out.push(']');
        }
        ExprKind::ArrayRepeat(v, n) => {
            out.push('[');
            expr(out, v, 0);
            out.push_str("; ");
            expr(out, n, 0);
            out.push(']');
        }
        ExprKind::Length(a) => {
            out.push('|');
            expr(out, a, 0);
            out.push('|');
        }
        ExprKind::Index(a, i) => {
            expr(out, a, PREC_POSTFIX);
            out.push('[');
            expr(out, i, 0);
            out.push(']');
        }
        ExprKind::RecordLiteral(fields) => {
            out.push('{');
            for (i, (n, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{n}: ").unwrap();
                expr(out, v, 0);
            }
            out.push('}');
        }
        ExprKind::Field(a, f) => {
            expr(out, a, PREC_POSTFIX);
            write!(out, ".{f}").unwrap();
        }
        ExprKind::Quantified {
            quantifier,
            binders,
            body,
        } => {
            write!(out, "{} {{ ", quantifier.keyword()).unwrap();
            for (i, (v, src)) in binders.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{v} in ").unwrap();
                expr(out, src, 0);
            }
            out.push_str(" | ");
            expr(out, body, 0);
            out.push_str(" }");
        }
        ExprKind::Call { name, args } | ExprKind::LambdaApply { name, args } => {
            write!(out, "{name}(").unwrap();
            list(out, args);
            out.push(')');
        }
        ExprKind::Deref(a) => {
            out.push('*');
            expr(out, a, PREC_UNARY);
        }
        ExprKind::New(a) => {
            out.push_str("new ");
            expr(out, a, PREC_UNARY);
        }
        ExprKind::Cast(t, a) => {
            write!(out, "({}) ", print_type(t)).unwrap();
            expr(out, a, PREC_POSTFIX);
        }
    }
}

fn list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, item, 0);
    }
}
