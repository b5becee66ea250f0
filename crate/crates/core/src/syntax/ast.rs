use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::Type;

pub type HoleId = u32;

/// Prefix reserved for names introduced by desugaring. Such names are never
/// offered to the synthesizer or listed in hole contexts.
pub const HIDDEN_PREFIX: char = '_';

pub fn is_hidden(name: &str) -> bool {
    name.starts_with(HIDDEN_PREFIX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Cons,
    Append,
    Add,
    Sub,
    Mul,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Compose,
    Apply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assoc {
    Left,
    Right,
    None,
}

impl Op {
    pub const ALL: [Op; 15] = [
        Op::Cons,
        Op::Append,
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Eq,
        Op::Neq,
        Op::Lt,
        Op::Le,
        Op::Gt,
        Op::Ge,
        Op::And,
        Op::Or,
        Op::Compose,
        Op::Apply,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Cons => ":",
            Op::Append => "++",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Eq => "==",
            Op::Neq => "/=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "&&",
            Op::Or => "||",
            Op::Compose => ".",
            Op::Apply => "$",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.iter().copied().find(|op| op.symbol() == s)
    }

    /// Haskell fixity: (precedence 0..=9, associativity).
    pub fn fixity(self) -> (u8, Assoc) {
        match self {
            Op::Compose => (9, Assoc::Right),
            Op::Mul => (7, Assoc::Left),
            Op::Add | Op::Sub => (6, Assoc::Left),
            Op::Cons | Op::Append => (5, Assoc::Right),
            Op::Eq | Op::Neq | Op::Lt | Op::Le | Op::Gt | Op::Ge => (4, Assoc::None),
            Op::And => (3, Assoc::Right),
            Op::Or => (2, Assoc::Right),
            Op::Apply => (0, Assoc::Right),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(String),
    Wild,
    Int(i64),
    Bool(bool),
    Nil,
    Cons(Box<Pattern>, Box<Pattern>),
    Tuple(Vec<Pattern>),
}

impl Pattern {
    /// Variables bound by the pattern, left to right.
    pub fn binders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_binders(&mut out);
        out
    }

    fn collect_binders<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pattern::Var(v) => out.push(v),
            Pattern::Cons(h, t) => {
                h.collect_binders(out);
                t.collect_binders(out);
            }
            Pattern::Tuple(ps) => ps.iter().for_each(|p| p.collect_binders(out)),
            Pattern::Wild | Pattern::Int(_) | Pattern::Bool(_) | Pattern::Nil => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rhs {
    Plain(Expr),
    /// `| guard = body` clauses; falls through to the next alternative when
    /// every guard is false.
    Guarded(Vec<(Expr, Expr)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alt {
    pub pat: Pattern,
    pub rhs: Rhs,
    pub wheres: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Hole(HoleId),
    Lam(String, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    BinOp(Op, Box<Expr>, Box<Expr>),
    /// An operator used as a function, e.g. `(:)`.
    OpRef(Op),
    List(Vec<Expr>),
    Range(Box<Expr>, Option<Box<Expr>>),
    Tuple(Vec<Expr>),
    Case(Box<Expr>, Vec<Alt>),
    /// `body where bindings`; the bindings are mutually recursive.
    Let(Vec<Binding>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binding {
    pub name: String,
    pub signature: Option<Type>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Program {
    pub bindings: Vec<Binding>,
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn binop(op: Op, l: Expr, r: Expr) -> Expr {
        Expr::BinOp(op, Box::new(l), Box::new(r))
    }

    pub fn lam(param: impl Into<String>, body: Expr) -> Expr {
        Expr::Lam(param.into(), Box::new(body))
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Expr::Hole(_))
    }

    /// Direct sub-expressions in source order. Paths index into this list.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Hole(_) | Expr::OpRef(_) => vec![],
            Expr::Lam(_, b) => vec![b],
            Expr::App(f, a) => vec![f, a],
            Expr::BinOp(_, l, r) => vec![l, r],
            Expr::List(es) | Expr::Tuple(es) => es.iter().collect(),
            Expr::Range(lo, hi) => {
                let mut v: Vec<&Expr> = vec![lo];
                if let Some(hi) = hi {
                    v.push(hi);
                }
                v
            }
            Expr::Case(s, alts) => {
                let mut v: Vec<&Expr> = vec![s];
                for alt in alts {
                    alt_children(alt, &mut v);
                }
                v
            }
            Expr::Let(bs, body) => {
                let mut v: Vec<&Expr> = vec![body];
                v.extend(bs.iter().map(|b| &b.body));
                v
            }
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Hole(_) | Expr::OpRef(_) => vec![],
            Expr::Lam(_, b) => vec![b],
            Expr::App(f, a) => vec![f, a],
            Expr::BinOp(_, l, r) => vec![l, r],
            Expr::List(es) | Expr::Tuple(es) => es.iter_mut().collect(),
            Expr::Range(lo, hi) => {
                let mut v: Vec<&mut Expr> = vec![lo];
                if let Some(hi) = hi {
                    v.push(hi);
                }
                v
            }
            Expr::Case(s, alts) => {
                let mut v: Vec<&mut Expr> = vec![s];
                for alt in alts {
                    match &mut alt.rhs {
                        Rhs::Plain(e) => v.push(e),
                        Rhs::Guarded(gs) => {
                            for (g, e) in gs {
                                v.push(g);
                                v.push(e);
                            }
                        }
                    }
                    v.extend(alt.wheres.iter_mut().map(|b| &mut b.body));
                }
                v
            }
            Expr::Let(bs, body) => {
                let mut v: Vec<&mut Expr> = vec![body];
                v.extend(bs.iter_mut().map(|b| &mut b.body));
                v
            }
        }
    }

    /// Pre-order walk over every node.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Expr)) {
        f(self);
        for c in self.children_mut() {
            c.walk_mut(f);
        }
    }

    /// Hole ids in left-to-right order.
    pub fn hole_ids(&self) -> Vec<HoleId> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Hole(id) = e {
                out.push(*id);
            }
        });
        out
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        free_vars_into(self, &mut bound, &mut out);
        out
    }
}

fn alt_children<'a>(alt: &'a Alt, v: &mut Vec<&'a Expr>) {
    match &alt.rhs {
        Rhs::Plain(e) => v.push(e),
        Rhs::Guarded(gs) => {
            for (g, e) in gs {
                v.push(g);
                v.push(e);
            }
        }
    }
    v.extend(alt.wheres.iter().map(|b| &b.body));
}

fn free_vars_into(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match e {
        Expr::Var(v) => {
            if !bound.iter().any(|b| b == v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        Expr::Lam(p, b) => {
            bound.push(p.clone());
            free_vars_into(b, bound, out);
            bound.pop();
        }
        Expr::Case(s, alts) => {
            free_vars_into(s, bound, out);
            for alt in alts {
                let before = bound.len();
                bound.extend(alt.pat.binders().into_iter().map(String::from));
                bound.extend(alt.wheres.iter().map(|b| b.name.clone()));
                let mut kids = Vec::new();
                alt_children(alt, &mut kids);
                for k in kids {
                    free_vars_into(k, bound, out);
                }
                bound.truncate(before);
            }
        }
        Expr::Let(bs, body) => {
            let before = bound.len();
            bound.extend(bs.iter().map(|b| b.name.clone()));
            free_vars_into(body, bound, out);
            for b in bs {
                free_vars_into(&b.body, bound, out);
            }
            bound.truncate(before);
        }
        _ => {
            for c in e.children() {
                free_vars_into(c, bound, out);
            }
        }
    }
}

impl Program {
    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.name == name)
    }

    pub fn binding_index(&self, name: &str) -> Option<usize> {
        self.bindings.iter().position(|b| b.name == name)
    }

    pub fn hole_ids(&self) -> Vec<HoleId> {
        self.bindings.iter().flat_map(|b| b.body.hole_ids()).collect()
    }

    pub fn has_holes(&self) -> bool {
        !self.hole_ids().is_empty()
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        for b in &self.bindings {
            b.body.walk(f);
        }
    }
}
