//! Recursive-descent parser.
//!
//! Layout is handled with a minimal offside rule: a block (the top level, a
//! `where` block, or `case` alternatives) remembers the column of its first
//! token, and a token that starts a line at or left of that column ends the
//! current item. Explicit `{ ...; ... }` braces switch the rule off.

use std::collections::BTreeSet;

use super::ast::{Alt, Binding, Expr, HoleId, Op, Pattern, Program, Rhs};
use super::lexer::{lex, Tok, Token};
use super::{ParseError, SyntaxError};
use crate::types::Type;

/// Unnumbered holes get temporary ids at or above this base until the
/// numbering pass.
const AUTO_HOLE_BASE: HoleId = 1 << 30;

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    let decls = if p.peek() == &Tok::Eof { Vec::new() } else { p.block(Parser::decl)? };
    p.expect(Tok::Eof)?;
    let mut program = Program { bindings: group_decls(decls).map_err(|e| p.err_msg(&e))? };
    number_holes(&mut program)?;
    Ok(program)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    p.blocks.push(0);
    let mut e = p.expr()?;
    p.expect(Tok::Eof)?;
    let mut prog = Program {
        bindings: vec![Binding { name: "_".into(), signature: None, body: e }],
    };
    number_holes(&mut prog)?;
    e = prog.bindings.pop().map(|b| b.body).unwrap_or(Expr::Int(0));
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    p.blocks.push(0);
    let t = p.ty()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Parses `name :: type`.
pub fn parse_signature(src: &str) -> Result<(String, Type), ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    p.blocks.push(0);
    let name = p.ident()?;
    p.expect(Tok::DoubleColon)?;
    let t = p.ty()?;
    p.expect(Tok::Eof)?;
    Ok((name, t))
}

enum Decl {
    Sig(String, Type),
    Equation { name: String, params: Vec<Pattern>, rhs: Rhs, wheres: Vec<Binding> },
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    blocks: Vec<usize>,
    auto_holes: u32,
    type_vars: Vec<String>,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, blocks: Vec::new(), auto_holes: 0, type_vars: Vec::new() }
    }

    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> SyntaxError {
        let t = self.tok();
        SyntaxError::new(
            t.line,
            t.col,
            format!("unexpected {}", t.tok.describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn err_msg(&self, msg: &str) -> SyntaxError {
        let t = self.tok();
        SyntaxError::new(t.line, t.col, msg, vec![])
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&[&tok.describe()]))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(&["identifier"])),
        }
    }

    /// True when the current token cannot continue the item being parsed.
    fn at_boundary(&self) -> bool {
        let t = self.tok();
        match t.tok {
            Tok::Eof | Tok::Semi | Tok::RBrace => true,
            _ => match self.blocks.last() {
                Some(&col) if col > 0 => t.line_start && t.col <= col,
                _ => false,
            },
        }
    }

    fn with_layout_off<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, SyntaxError>) -> Result<T, SyntaxError> {
        self.blocks.push(0);
        let r = f(self);
        self.blocks.pop();
        r
    }

    /// Parses a `{ item; item }` block or a layout block of items.
    fn block<T>(&mut self, item: fn(&mut Self) -> Result<T, SyntaxError>) -> Result<Vec<T>, SyntaxError> {
        let mut items = Vec::new();
        if *self.peek() == Tok::LBrace {
            self.bump();
            self.blocks.push(0);
            while *self.peek() != Tok::RBrace {
                items.push(item(self)?);
                if *self.peek() == Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
            self.blocks.pop();
            self.expect(Tok::RBrace)?;
            return Ok(items);
        }
        let col = self.tok().col;
        self.blocks.push(col);
        loop {
            items.push(item(self)?);
            let mut separated = false;
            while *self.peek() == Tok::Semi {
                self.bump();
                separated = true;
            }
            let t = self.tok();
            let next_line_item = t.line_start && t.col == col;
            if t.tok == Tok::Eof || !(separated || next_line_item) {
                break;
            }
        }
        self.blocks.pop();
        Ok(items)
    }

    fn decl(&mut self) -> Result<Decl, SyntaxError> {
        let name = self.ident()?;
        if *self.peek() == Tok::DoubleColon {
            self.bump();
            self.type_vars.clear();
            let t = self.ty()?;
            return Ok(Decl::Sig(name, t));
        }
        let mut params = Vec::new();
        while !matches!(self.peek(), Tok::Equals | Tok::Bar) {
            if self.at_boundary() {
                return Err(self.err(&["=", "|", "pattern"]));
            }
            params.push(self.apat()?);
        }
        let rhs = self.rhs(Tok::Equals)?;
        let wheres = self.wheres()?;
        Ok(Decl::Equation { name, params, rhs, wheres })
    }

    fn rhs(&mut self, sep: Tok) -> Result<Rhs, SyntaxError> {
        if *self.peek() == Tok::Bar {
            let mut guards = Vec::new();
            while *self.peek() == Tok::Bar && !self.at_boundary() {
                self.bump();
                let g = self.expr()?;
                self.expect(sep.clone())?;
                let e = self.expr()?;
                guards.push((g, e));
            }
            Ok(Rhs::Guarded(guards))
        } else {
            self.expect(sep)?;
            Ok(Rhs::Plain(self.expr()?))
        }
    }

    fn wheres(&mut self) -> Result<Vec<Binding>, SyntaxError> {
        if *self.peek() != Tok::Where || self.at_boundary() {
            return Ok(Vec::new());
        }
        self.bump();
        let decls = self.block(Parser::decl)?;
        group_decls(decls).map_err(|e| self.err_msg(&e))
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Tok::Backslash => self.lambda(),
            Tok::Case => self.case(),
            Tok::Ident(s) if s == "let" => self.let_in(),
            _ => self.op_expr(0),
        }
    }

    fn lambda(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Tok::Backslash)?;
        let mut params = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Arrow => break,
                Tok::Ident(s) => params.push(s),
                Tok::Underscore => params.push(format!("_w{}", params.len())),
                _ => return Err(self.err(&["parameter", "->"])),
            }
            self.bump();
        }
        if params.is_empty() {
            return Err(self.err(&["parameter"]));
        }
        self.expect(Tok::Arrow)?;
        let body = self.expr()?;
        Ok(params.into_iter().rev().fold(body, |b, p| Expr::lam(p, b)))
    }

    fn case(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Tok::Case)?;
        let scrut = self.with_layout_off(|p| p.expr())?;
        self.expect(Tok::Of)?;
        let alts = self.block(Parser::alt)?;
        Ok(Expr::Case(Box::new(scrut), alts))
    }

    fn let_in(&mut self) -> Result<Expr, SyntaxError> {
        self.bump();
        let decls = self.block(Parser::decl)?;
        let bindings = group_decls(decls).map_err(|e| self.err_msg(&e))?;
        match self.peek() {
            Tok::Ident(s) if s == "in" => {
                self.bump();
            }
            _ => return Err(self.err(&["in"])),
        }
        let body = self.expr()?;
        Ok(Expr::Let(bindings, Box::new(body)))
    }

    fn alt(&mut self) -> Result<Alt, SyntaxError> {
        let pat = self.pattern()?;
        let rhs = self.rhs(Tok::Arrow)?;
        let wheres = self.wheres()?;
        Ok(Alt { pat, rhs, wheres })
    }

    fn peek_op(&self) -> Option<(Op, Option<String>)> {
        if self.at_boundary() {
            return None;
        }
        match self.peek() {
            Tok::Op(s) => Op::from_symbol(s).map(|op| (op, None)),
            // backtick operators behave as infixl 9; reuse Compose's slot only
            // for the fixity lookup below
            Tok::Backtick(name) => Some((Op::Compose, Some(name.clone()))),
            _ => None,
        }
    }

    fn op_expr(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.operand()?;
        while let Some((op, backtick)) = self.peek_op() {
            let (prec, assoc) = match backtick {
                Some(_) => (9, super::ast::Assoc::Left),
                None => op.fixity(),
            };
            if prec < min_prec {
                break;
            }
            self.bump();
            let next_min = if assoc == super::ast::Assoc::Right { prec } else { prec + 1 };
            let rhs = match self.peek() {
                Tok::Backslash | Tok::Case => self.expr()?,
                Tok::Ident(s) if s == "let" => self.expr()?,
                _ => self.op_expr(next_min)?,
            };
            lhs = match backtick {
                Some(name) => Expr::apps(Expr::Var(name), [lhs, rhs]),
                None => Expr::binop(op, lhs, rhs),
            };
        }
        Ok(lhs)
    }

    fn operand(&mut self) -> Result<Expr, SyntaxError> {
        if let (Tok::Op(s), Tok::Int(n)) = (self.peek(), self.peek_at(1)) {
            if s == "-" {
                let n = *n;
                self.bump();
                self.bump();
                return Ok(Expr::Int(-n));
            }
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        if self.at_boundary() {
            return false;
        }
        match self.peek() {
            Tok::Ident(s) => s != "in" && s != "let",
            Tok::Int(_) | Tok::Con(_) | Tok::Hole(_) | Tok::LParen | Tok::LBracket => true,
            _ => false,
        }
    }

    fn app(&mut self) -> Result<Expr, SyntaxError> {
        let mut f = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            f = Expr::app(f, a);
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if s != "in" && s != "let" => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::Con(c) => {
                let b = match c.as_str() {
                    "True" => true,
                    "False" => false,
                    _ => return Err(self.err_msg(&format!("unknown constructor {c}"))),
                };
                self.bump();
                Ok(Expr::Bool(b))
            }
            Tok::Hole(n) => {
                self.bump();
                match n {
                    Some(n) if n >= AUTO_HOLE_BASE => Err(self.err_msg("hole number too large")),
                    Some(n) => Ok(Expr::Hole(n)),
                    None => {
                        let id = AUTO_HOLE_BASE + self.auto_holes;
                        self.auto_holes += 1;
                        Ok(Expr::Hole(id))
                    }
                }
            }
            Tok::LParen => self.with_layout_off(|p| p.paren()),
            Tok::LBracket => self.with_layout_off(|p| p.bracket()),
            _ => Err(self.err(&["expression"])),
        }
    }

    fn paren(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Tok::LParen)?;
        if let Tok::Op(s) = self.peek().clone() {
            if *self.peek_at(1) == Tok::RParen {
                let op = Op::from_symbol(&s).ok_or_else(|| self.err_msg(&format!("unknown operator {s}")))?;
                self.bump();
                self.bump();
                return Ok(Expr::OpRef(op));
            }
        }
        let first = self.expr()?;
        let mut items = vec![first];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        if items.len() == 1 {
            Ok(items.pop().unwrap_or(Expr::Int(0)))
        } else {
            Ok(Expr::Tuple(items))
        }
    }

    fn bracket(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Tok::LBracket)?;
        if *self.peek() == Tok::RBracket {
            self.bump();
            return Ok(Expr::List(vec![]));
        }
        let first = self.expr()?;
        if *self.peek() == Tok::DotDot {
            self.bump();
            if *self.peek() == Tok::RBracket {
                self.bump();
                return Ok(Expr::Range(Box::new(first), None));
            }
            let hi = self.expr()?;
            self.expect(Tok::RBracket)?;
            return Ok(Expr::Range(Box::new(first), Some(Box::new(hi))));
        }
        let mut items = vec![first];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.expr()?);
        }
        self.expect(Tok::RBracket)?;
        Ok(Expr::List(items))
    }

    fn pattern(&mut self) -> Result<Pattern, SyntaxError> {
        let head = self.apat()?;
        if matches!(self.peek(), Tok::Op(s) if s == ":") {
            self.bump();
            let tail = self.pattern()?;
            return Ok(Pattern::Cons(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    fn apat(&mut self) -> Result<Pattern, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Pattern::Var(s))
            }
            Tok::Underscore => {
                self.bump();
                Ok(Pattern::Wild)
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Pattern::Int(n))
            }
            Tok::Con(c) if c == "True" || c == "False" => {
                self.bump();
                Ok(Pattern::Bool(c == "True"))
            }
            Tok::LBracket => self.with_layout_off(|p| {
                p.bump();
                let mut items = Vec::new();
                if *p.peek() != Tok::RBracket {
                    items.push(p.pattern()?);
                    while *p.peek() == Tok::Comma {
                        p.bump();
                        items.push(p.pattern()?);
                    }
                }
                p.expect(Tok::RBracket)?;
                Ok(items
                    .into_iter()
                    .rev()
                    .fold(Pattern::Nil, |t, h| Pattern::Cons(Box::new(h), Box::new(t))))
            }),
            Tok::LParen => self.with_layout_off(|p| {
                p.bump();
                if let (Tok::Op(s), Tok::Int(n)) = (p.peek().clone(), p.peek_at(1).clone()) {
                    if s == "-" {
                        p.bump();
                        p.bump();
                        p.expect(Tok::RParen)?;
                        return Ok(Pattern::Int(-n));
                    }
                }
                let mut items = vec![p.pattern()?];
                while *p.peek() == Tok::Comma {
                    p.bump();
                    items.push(p.pattern()?);
                }
                p.expect(Tok::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap_or(Pattern::Wild))
                } else {
                    Ok(Pattern::Tuple(items))
                }
            }),
            _ => Err(self.err(&["pattern"])),
        }
    }

    fn ty(&mut self) -> Result<Type, SyntaxError> {
        let arg = self.aty()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let res = self.ty()?;
            return Ok(Type::fun(arg, res));
        }
        Ok(arg)
    }

    fn aty(&mut self) -> Result<Type, SyntaxError> {
        match self.peek().clone() {
            Tok::Con(c) => {
                self.bump();
                match c.as_str() {
                    "Int" => Ok(Type::Int),
                    "Bool" => Ok(Type::Bool),
                    _ => Err(self.err_msg(&format!("unknown type {c}"))),
                }
            }
            Tok::Ident(v) => {
                self.bump();
                let idx = match self.type_vars.iter().position(|x| *x == v) {
                    Some(i) => i,
                    None => {
                        self.type_vars.push(v);
                        self.type_vars.len() - 1
                    }
                };
                Ok(Type::Var(idx as u32))
            }
            Tok::LBracket => self.with_layout_off(|p| {
                p.bump();
                let t = p.ty()?;
                p.expect(Tok::RBracket)?;
                Ok(Type::list(t))
            }),
            Tok::LParen => self.with_layout_off(|p| {
                p.bump();
                let mut items = vec![p.ty()?];
                while *p.peek() == Tok::Comma {
                    p.bump();
                    items.push(p.ty()?);
                }
                p.expect(Tok::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap_or(Type::Int))
                } else {
                    Ok(Type::Tuple(items))
                }
            }),
            _ => Err(self.err(&["type"])),
        }
    }
}

/// Merges consecutive equations of the same name into bindings and attaches
/// signatures.
fn group_decls(decls: Vec<Decl>) -> Result<Vec<Binding>, String> {
    let mut sigs: Vec<(String, Type)> = Vec::new();
    let mut groups: Vec<(String, Vec<(Vec<Pattern>, Rhs, Vec<Binding>)>)> = Vec::new();
    for d in decls {
        match d {
            Decl::Sig(n, t) => sigs.push((n, t)),
            Decl::Equation { name, params, rhs, wheres } => match groups.last_mut() {
                Some((g, eqs)) if *g == name => eqs.push((params, rhs, wheres)),
                _ => {
                    if groups.iter().any(|(g, _)| *g == name) {
                        return Err(format!("equations for {name} are not contiguous"));
                    }
                    groups.push((name, vec![(params, rhs, wheres)]));
                }
            },
        }
    }
    for (n, _) in &sigs {
        if !groups.iter().any(|(g, _)| g == n) {
            return Err(format!("signature for {n} lacks a definition"));
        }
    }
    groups
        .into_iter()
        .map(|(name, eqs)| {
            let signature = sigs.iter().find(|(n, _)| *n == name).map(|(_, t)| t.clone());
            let body = desugar_equations(&name, eqs)?;
            Ok(Binding { name, signature, body })
        })
        .collect()
}

pub(crate) fn hidden_param(i: usize) -> String {
    format!("_a{i}")
}

fn desugar_equations(name: &str, mut eqs: Vec<(Vec<Pattern>, Rhs, Vec<Binding>)>) -> Result<Expr, String> {
    let arity = eqs[0].0.len();
    if eqs.iter().any(|(ps, _, _)| ps.len() != arity) {
        return Err(format!("equations for {name} have different numbers of arguments"));
    }
    let simple = eqs.len() == 1
        && matches!(eqs[0].1, Rhs::Plain(_))
        && eqs[0].0.iter().all(|p| matches!(p, Pattern::Var(_)));
    if simple {
        let (params, rhs, wheres) = eqs.pop().ok_or("empty equation group")?;
        let Rhs::Plain(mut body) = rhs else { unreachable!() };
        if !wheres.is_empty() {
            body = Expr::Let(wheres, Box::new(body));
        }
        return Ok(params.into_iter().rev().fold(body, |b, p| match p {
            Pattern::Var(v) => Expr::lam(v, b),
            _ => b,
        }));
    }
    let params: Vec<String> = (0..arity).map(hidden_param).collect();
    let scrut = match arity {
        0 => Expr::Bool(true),
        1 => Expr::Var(params[0].clone()),
        _ => Expr::Tuple(params.iter().cloned().map(Expr::Var).collect()),
    };
    let alts = eqs
        .into_iter()
        .map(|(mut ps, rhs, wheres)| {
            let pat = match arity {
                0 => Pattern::Wild,
                1 => ps.pop().unwrap_or(Pattern::Wild),
                _ => Pattern::Tuple(ps),
            };
            Alt { pat, rhs, wheres }
        })
        .collect();
    let body = Expr::Case(Box::new(scrut), alts);
    Ok(params.into_iter().rev().fold(body, |b, p| Expr::lam(p, b)))
}

fn number_holes(p: &mut Program) -> Result<(), SyntaxError> {
    let mut explicit = BTreeSet::new();
    let mut dup = None;
    p.walk(&mut |e| {
        if let Expr::Hole(id) = e {
            if *id < AUTO_HOLE_BASE && !explicit.insert(*id) {
                dup.get_or_insert(*id);
            }
        }
    });
    if let Some(id) = dup {
        return Err(SyntaxError::duplicate_hole(id));
    }
    let mut next = 0;
    for b in &mut p.bindings {
        b.body.walk_mut(&mut |e| {
            if let Expr::Hole(id) = e {
                if *id >= AUTO_HOLE_BASE {
                    while explicit.contains(&next) {
                        next += 1;
                    }
                    *id = next;
                    explicit.insert(next);
                }
            }
        });
    }
    Ok(())
}
