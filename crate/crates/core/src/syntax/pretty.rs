//! Pretty-printer. Output re-parses to the same AST.
//!
//! Bindings produced by multi-equation desugaring are printed back as
//! equations; top-level `where` blocks use layout, everything nested uses
//! explicit braces.

use std::fmt::Write;

use super::ast::{is_hidden, Alt, Assoc, Binding, Expr, Pattern, Program, Rhs};
use super::parser::hidden_param;

const TOP: u8 = 0;
const APP: u8 = 11;
const ATOM: u8 = 12;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, b) in p.bindings.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_binding_layout(&mut out, b, 0);
    }
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    expr(e, TOP)
}

pub fn pretty_binding(b: &Binding) -> String {
    let mut out = String::new();
    write_binding_layout(&mut out, b, 0);
    out
}

pub fn pretty_pattern(p: &Pattern) -> String {
    pattern(p, false)
}

/// One equation: name, argument patterns, right-hand side, where-bindings.
struct Equation<'a> {
    params: Vec<String>,
    rhs: EqRhs<'a>,
    wheres: &'a [Binding],
}

enum EqRhs<'a> {
    Plain(&'a Expr),
    Guarded(&'a [(Expr, Expr)]),
}

fn lambda_chain(e: &Expr) -> (Vec<&str>, &Expr) {
    let mut params = Vec::new();
    let mut cur = e;
    while let Expr::Lam(p, b) = cur {
        params.push(p.as_str());
        cur = b;
    }
    (params, cur)
}

/// Recovers the equations a binding body was desugared from.
fn equations(body: &Expr) -> Option<Vec<Equation<'_>>> {
    let (params, inner) = lambda_chain(body);
    let desugared = !params.is_empty() && params.iter().enumerate().all(|(i, p)| *p == hidden_param(i));
    if desugared {
        let Expr::Case(scrut, alts) = inner else { return None };
        let n = params.len();
        let scrut_ok = match (n, scrut.as_ref()) {
            (1, Expr::Var(v)) => *v == params[0],
            (_, Expr::Tuple(vs)) => {
                vs.len() == n && vs.iter().zip(&params).all(|(v, p)| matches!(v, Expr::Var(x) if x == p))
            }
            _ => false,
        };
        if !scrut_ok || alts.is_empty() {
            return None;
        }
        let mut eqs = Vec::new();
        for alt in alts {
            let pats: Vec<&Pattern> = match (n, &alt.pat) {
                (1, p) => vec![p],
                (_, Pattern::Tuple(ps)) if ps.len() == n => ps.iter().collect(),
                _ => return None,
            };
            let params = pats.into_iter().map(|p| pattern(p, true)).collect();
            let rhs = match &alt.rhs {
                Rhs::Plain(e) => EqRhs::Plain(e),
                Rhs::Guarded(gs) => EqRhs::Guarded(gs),
            };
            eqs.push(Equation { params, rhs, wheres: &alt.wheres });
        }
        // A single all-variable, unguarded equation would re-parse without
        // the case; print it as a lambda instead.
        if eqs.len() == 1
            && matches!(eqs[0].rhs, EqRhs::Plain(_))
            && alts[0].pat.binders().len() == count_pattern_nodes(&alts[0].pat, n)
        {
            return None;
        }
        return Some(eqs);
    }
    if params.iter().any(|p| is_hidden(p)) {
        return None;
    }
    let params = params.into_iter().map(String::from).collect();
    let (rhs, wheres): (&Expr, &[Binding]) = match inner {
        Expr::Let(bs, body) => (body, bs),
        e => (e, &[]),
    };
    Some(vec![Equation { params, rhs: EqRhs::Plain(rhs), wheres }])
}

/// Number of leaf patterns at the top of an n-ary equation head; used to
/// detect all-variable heads.
fn count_pattern_nodes(p: &Pattern, n: usize) -> usize {
    match (n, p) {
        (1, Pattern::Var(_)) => 1,
        (1, _) => usize::MAX,
        (_, Pattern::Tuple(ps)) if ps.iter().all(|p| matches!(p, Pattern::Var(_))) => ps.len(),
        _ => usize::MAX,
    }
}

fn write_equation_head(out: &mut String, name: &str, eq: &Equation<'_>) {
    out.push_str(name);
    for p in &eq.params {
        out.push(' ');
        out.push_str(p);
    }
}

fn write_rhs(out: &mut String, rhs: &EqRhs<'_>, sep: &str) {
    match rhs {
        EqRhs::Plain(e) => {
            let _ = write!(out, " {sep} {}", expr(e, TOP));
        }
        EqRhs::Guarded(gs) => {
            for (g, e) in gs.iter() {
                let _ = write!(out, " | {} {sep} {}", expr(g, TOP), expr(e, TOP));
            }
        }
    }
}

fn write_binding_layout(out: &mut String, b: &Binding, indent: usize) {
    let pad = " ".repeat(indent);
    if let Some(sig) = &b.signature {
        let _ = writeln!(out, "{pad}{} :: {sig}", b.name);
    }
    match equations(&b.body) {
        Some(eqs) => {
            for (i, eq) in eqs.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&pad);
                write_equation_head(out, &b.name, eq);
                write_rhs(out, &eq.rhs, "=");
                if !eq.wheres.is_empty() {
                    let _ = write!(out, "\n{pad}  where");
                    for w in eq.wheres {
                        out.push('\n');
                        write_binding_layout(out, w, indent + 4);
                    }
                }
            }
        }
        None => {
            let _ = write!(out, "{pad}{} = {}", b.name, expr(&b.body, TOP));
        }
    }
}

fn binding_inline(b: &Binding) -> String {
    let mut parts = Vec::new();
    if let Some(sig) = &b.signature {
        parts.push(format!("{} :: {sig}", b.name));
    }
    match equations(&b.body) {
        Some(eqs) => {
            for eq in &eqs {
                let mut s = String::new();
                write_equation_head(&mut s, &b.name, eq);
                write_rhs(&mut s, &eq.rhs, "=");
                if !eq.wheres.is_empty() {
                    let _ = write!(s, " where {}", bindings_braced(eq.wheres));
                }
                parts.push(s);
            }
        }
        None => parts.push(format!("{} = {}", b.name, expr(&b.body, TOP))),
    }
    parts.join("; ")
}

fn bindings_braced(bs: &[Binding]) -> String {
    let inner: Vec<String> = bs.iter().map(binding_inline).collect();
    format!("{{ {} }}", inner.join("; "))
}

fn alt(a: &Alt) -> String {
    let mut s = pattern(&a.pat, false);
    match &a.rhs {
        Rhs::Plain(e) => {
            let _ = write!(s, " -> {}", expr(e, TOP));
        }
        Rhs::Guarded(gs) => {
            for (g, e) in gs {
                let _ = write!(s, " | {} -> {}", expr(g, TOP), expr(e, TOP));
            }
        }
    }
    if !a.wheres.is_empty() {
        let _ = write!(s, " where {}", bindings_braced(&a.wheres));
    }
    s
}

fn paren_if(cond: bool, s: String) -> String {
    if cond {
        format!("({s})")
    } else {
        s
    }
}

fn expr(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Int(n) if *n < 0 => format!("({n})"),
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Expr::Var(v) => v.clone(),
        Expr::Hole(id) => format!("?{id}"),
        Expr::OpRef(op) => format!("({op})"),
        Expr::Lam(..) => {
            let (params, body) = lambda_chain(e);
            paren_if(ctx > TOP, format!("\\{} -> {}", params.join(" "), expr(body, TOP)))
        }
        Expr::App(..) => {
            let mut args = Vec::new();
            let mut head = e;
            while let Expr::App(f, a) = head {
                args.push(a);
                head = f;
            }
            let mut s = expr(head, APP);
            for a in args.iter().rev() {
                s.push(' ');
                s.push_str(&expr(a, ATOM));
            }
            paren_if(ctx > APP, s)
        }
        Expr::BinOp(op, l, r) => {
            let (prec, assoc) = op.fixity();
            let level = prec + 1;
            let (lc, rc) = match assoc {
                Assoc::Left => (level, level + 1),
                Assoc::Right => (level + 1, level),
                Assoc::None => (level + 1, level + 1),
            };
            paren_if(ctx > level, format!("{} {op} {}", expr(l, lc), expr(r, rc)))
        }
        Expr::List(es) => {
            let items: Vec<String> = es.iter().map(|e| expr(e, TOP)).collect();
            format!("[{}]", items.join(", "))
        }
        Expr::Range(lo, hi) => match hi {
            Some(hi) => format!("[{}..{}]", expr(lo, TOP), expr(hi, TOP)),
            None => format!("[{}..]", expr(lo, TOP)),
        },
        Expr::Tuple(es) => {
            let items: Vec<String> = es.iter().map(|e| expr(e, TOP)).collect();
            format!("({})", items.join(", "))
        }
        Expr::Case(s, alts) => {
            let alts: Vec<String> = alts.iter().map(alt).collect();
            paren_if(ctx > TOP, format!("case {} of {{ {} }}", expr(s, TOP), alts.join("; ")))
        }
        Expr::Let(bs, body) => paren_if(ctx > TOP, format!("let {} in {}", bindings_braced(bs), expr(body, TOP))),
    }
}

fn pattern(p: &Pattern, atomic: bool) -> String {
    match p {
        Pattern::Var(v) => v.clone(),
        Pattern::Wild => "_".into(),
        Pattern::Int(n) if *n < 0 => format!("({n})"),
        Pattern::Int(n) => n.to_string(),
        Pattern::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Pattern::Nil => "[]".into(),
        Pattern::Cons(h, t) => paren_if(atomic, format!("{}:{}", pattern(h, true), pattern(t, false))),
        Pattern::Tuple(ps) => {
            let items: Vec<String> = ps.iter().map(|p| pattern(p, false)).collect();
            format!("({})", items.join(", "))
        }
    }
}
