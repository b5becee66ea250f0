use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use thiserror::Error;

use super::{unify_in, Scheme, Subst, TyVar, Type};
use crate::syntax::{is_hidden, Alt, Binding, Expr, HoleId, Op, Path, Pattern, Program, Rhs};

/// Library and top-level names with their schemes.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv(BTreeMap<String, Scheme>);

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn get(&self, name: &str) -> Option<&Scheme> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, s: Scheme) {
        self.0.insert(name.into(), s);
    }

    pub fn extend(&mut self, other: TypeEnv) {
        self.0.extend(other.0);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Keeps only the listed names.
    pub fn restrict(&self, names: &[String]) -> TypeEnv {
        TypeEnv(self.0.iter().filter(|(k, _)| names.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeError {
    #[error("type error at {path}: expected {expected}, found {found}")]
    Mismatch { path: Path, expected: Type, found: Type },
    #[error("unbound variable `{name}` at {path}")]
    UnboundVariable { name: String, path: Path },
    #[error("`{name}` is less polymorphic than its signature {signature} (inferred {inferred})")]
    RigidSignature { name: String, path: Path, signature: Type, inferred: Type },
    #[error("no binding named `{0}`")]
    MissingEntry(String),
}

impl TypeError {
    pub fn path(&self) -> Option<&Path> {
        match self {
            TypeError::Mismatch { path, .. }
            | TypeError::UnboundVariable { path, .. }
            | TypeError::RigidSignature { path, .. } => Some(path),
            TypeError::MissingEntry(_) => None,
        }
    }
}

/// A program together with the types inference assigned to it.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    pub entry: String,
    pub signature: Type,
    pub node_types: HashMap<Path, Type>,
    /// Hole types with leftover type variables defaulted to `Int`.
    pub hole_types: BTreeMap<HoleId, Type>,
    /// Lambda- and pattern-bound names visible at each hole, outermost first.
    pub hole_envs: BTreeMap<HoleId, Vec<(String, Type)>>,
    pub binding_types: BTreeMap<String, Scheme>,
}

impl TypedProgram {
    pub fn hole_type(&self, id: HoleId) -> Option<&Type> {
        self.hole_types.get(&id)
    }
}

/// Infers `p` against the library `prelude`, checking `entry` at `signature`.
pub fn infer(p: &Program, prelude: &TypeEnv, entry: &str, signature: &Type) -> Result<TypedProgram, TypeError> {
    if p.binding(entry).is_none() {
        return Err(TypeError::MissingEntry(entry.to_string()));
    }
    let mut inf = Infer::new(prelude);
    let overrides: HashMap<&str, &Type> = [(entry, signature)].into_iter().collect();
    let roots: Vec<(Path, &Binding)> =
        p.bindings.iter().enumerate().map(|(i, b)| (Path::binding(i), b)).collect();
    let schemes = inf.group(&roots, &overrides)?;
    let s = inf.subst.normalized();
    let node_types = inf.node_types.into_iter().map(|(k, t)| (k, t.apply(&s))).collect();
    let hole_types = inf.hole_types.into_iter().map(|(k, t)| (k, t.apply(&s).default_to_int())).collect();
    let hole_envs = inf
        .hole_envs
        .into_iter()
        .map(|(k, env)| (k, env.into_iter().map(|(n, t)| (n, t.apply(&s).default_to_int())).collect()))
        .collect();
    Ok(TypedProgram {
        program: p.clone(),
        entry: entry.to_string(),
        signature: signature.clone(),
        node_types,
        hole_types,
        hole_envs,
        binding_types: schemes.into_iter().collect(),
    })
}

/// Infers a group of top-level bindings (library source, properties) and
/// returns their generalized schemes.
pub fn infer_bindings(bindings: &[Binding], env: &TypeEnv) -> Result<TypeEnv, TypeError> {
    let mut inf = Infer::new(env);
    let roots: Vec<(Path, &Binding)> = bindings.iter().enumerate().map(|(i, b)| (Path::binding(i), b)).collect();
    let schemes = inf.group(&roots, &HashMap::new())?;
    let mut out = TypeEnv::new();
    for (name, s) in schemes {
        out.insert(name, s);
    }
    Ok(out)
}

/// Type of a built-in operator.
pub fn op_scheme(op: Op) -> Scheme {
    let a = Type::Var(0);
    let b = Type::Var(1);
    let c = Type::Var(2);
    let bin = |x: Type, y: Type, r: Type| Type::arrows([x, y], r);
    let ty = match op {
        Op::Cons => bin(a.clone(), Type::list(a.clone()), Type::list(a)),
        Op::Append => bin(Type::list(a.clone()), Type::list(a.clone()), Type::list(a)),
        Op::Add | Op::Sub | Op::Mul => bin(Type::Int, Type::Int, Type::Int),
        Op::Eq | Op::Neq | Op::Lt | Op::Le | Op::Gt | Op::Ge => bin(a.clone(), a, Type::Bool),
        Op::And | Op::Or => bin(Type::Bool, Type::Bool, Type::Bool),
        Op::Compose => bin(Type::fun(b.clone(), c.clone()), Type::fun(a.clone(), b), Type::fun(a, c)),
        Op::Apply => bin(Type::fun(a.clone(), b.clone()), a, b),
    };
    Scheme::generalize_all(ty)
}

struct Local {
    name: String,
    scheme: Scheme,
    /// Lambda- or pattern-bound, and so part of a hole's visible context.
    visible: bool,
}

struct Infer<'g> {
    globals: &'g TypeEnv,
    subst: Subst,
    next: TyVar,
    locals: Vec<Local>,
    node_types: Vec<(Path, Type)>,
    hole_types: BTreeMap<HoleId, Type>,
    hole_envs: BTreeMap<HoleId, Vec<(String, Type)>>,
}

impl<'g> Infer<'g> {
    fn new(globals: &'g TypeEnv) -> Self {
        Infer {
            globals,
            subst: Subst::default(),
            next: 0,
            locals: Vec::new(),
            node_types: Vec::new(),
            hole_types: BTreeMap::new(),
            hole_envs: BTreeMap::new(),
        }
    }

    fn fresh(&mut self) -> Type {
        let v = self.next;
        self.next += 1;
        Type::Var(v)
    }

    fn instantiate(&mut self, s: &Scheme) -> Type {
        let mut next = self.next;
        let t = s.instantiate(&mut || {
            let v = next;
            next += 1;
            v
        });
        self.next = next;
        t
    }

    fn resolve(&self, t: &Type) -> Type {
        t.apply(&self.subst)
    }

    fn expect(&mut self, path: &Path, expected: &Type, found: &Type) -> Result<(), TypeError> {
        unify_in(&mut self.subst, expected, found).map_err(|_| TypeError::Mismatch {
            path: path.clone(),
            expected: self.resolve(expected),
            found: self.resolve(found),
        })
    }

    fn env_vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        for l in &self.locals {
            let t = self.resolve(&l.scheme.ty);
            out.extend(t.free_vars().into_iter().filter(|v| !l.scheme.vars.contains(v)));
        }
        out
    }

    fn generalize(&self, t: &Type) -> Scheme {
        let t = self.resolve(t);
        let env = self.env_vars();
        Scheme { vars: t.free_vars().into_iter().filter(|v| !env.contains(v)).collect(), ty: t }
    }

    fn lookup(&mut self, name: &str, path: &Path) -> Result<Type, TypeError> {
        if let Some(l) = self.locals.iter().rev().find(|l| l.name == name) {
            let s = l.scheme.clone();
            return Ok(self.instantiate(&s));
        }
        match self.globals.get(name) {
            Some(s) => {
                let s = s.clone();
                Ok(self.instantiate(&s))
            }
            None => Err(TypeError::UnboundVariable { name: name.to_string(), path: path.clone() }),
        }
    }

    /// Infers a mutually recursive binding group, processing strongly
    /// connected components dependencies first. Pushes the resulting schemes
    /// onto `locals` only for nested groups; returns them in all cases.
    fn group(
        &mut self,
        bindings: &[(Path, &Binding)],
        overrides: &HashMap<&str, &Type>,
    ) -> Result<Vec<(String, Scheme)>, TypeError> {
        let mut graph = DiGraph::<usize, ()>::new();
        let nodes: Vec<_> = (0..bindings.len()).map(|i| graph.add_node(i)).collect();
        let index: HashMap<&str, usize> = bindings.iter().enumerate().map(|(i, (_, b))| (b.name.as_str(), i)).collect();
        for (i, (_, b)) in bindings.iter().enumerate() {
            for fv in b.body.free_vars() {
                if let Some(&j) = index.get(fv.as_str()) {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let base = self.locals.len();
        let mut out = Vec::new();
        for scc in tarjan_scc(&graph) {
            let mut members: Vec<usize> = scc.into_iter().map(|n| graph[n]).collect();
            members.sort_unstable();
            let mut slots = Vec::new();
            for &i in &members {
                let (path, b) = (bindings[i].0.clone(), bindings[i].1);
                let sig = overrides.get(b.name.as_str()).copied().or(b.signature.as_ref());
                let (ty, rigid) = match sig {
                    Some(sig) => {
                        let scheme = Scheme::generalize_all(sig.clone());
                        let rigid: Vec<TyVar> = (0..scheme.vars.len()).map(|_| self.next_var()).collect();
                        let ty = scheme.ty.map_vars(&|v| {
                            Type::Var(scheme.vars.iter().position(|x| *x == v).map_or(v, |k| rigid[k]))
                        });
                        (ty, rigid)
                    }
                    None => (self.fresh(), vec![]),
                };
                slots.push((i, path, ty.clone(), rigid));
                self.locals.push(Local { name: b.name.clone(), scheme: Scheme::mono(ty), visible: false });
            }
            for (i, path, ty, _) in &slots {
                let b = bindings[*i].1;
                self.check(&b.body, path, ty)?;
            }
            self.locals.truncate(self.locals.len() - slots.len());
            let has_holes = members.iter().any(|&i| !bindings[i].1.body.hole_ids().is_empty());
            for (i, path, ty, rigid) in slots {
                let b = bindings[i].1;
                self.check_rigid(&b.name, &path, &ty, &rigid)?;
                let scheme = if has_holes { Scheme::mono(self.resolve(&ty)) } else { self.generalize(&ty) };
                self.locals.push(Local { name: b.name.clone(), scheme: scheme.clone(), visible: false });
                out.push((b.name.clone(), scheme));
            }
        }
        self.locals.truncate(base);
        Ok(out)
    }

    fn next_var(&mut self) -> TyVar {
        let v = self.next;
        self.next += 1;
        v
    }

    fn check_rigid(&self, name: &str, path: &Path, ty: &Type, rigid: &[TyVar]) -> Result<(), TypeError> {
        if rigid.is_empty() {
            return Ok(());
        }
        let env = self.env_vars();
        let mut seen = BTreeSet::new();
        for r in rigid {
            let ok = match self.resolve(&Type::Var(*r)) {
                Type::Var(v) => seen.insert(v) && !env.contains(&v),
                _ => false,
            };
            if !ok {
                return Err(TypeError::RigidSignature {
                    name: name.to_string(),
                    path: path.clone(),
                    signature: ty.map_vars(&|v| Type::Var(rigid.iter().position(|r| *r == v).map_or(v, |k| k as TyVar))),
                    inferred: self.resolve(ty),
                });
            }
        }
        Ok(())
    }

    /// Pushes the binding group's schemes into scope and returns how many.
    fn enter_group(&mut self, bindings: &[(Path, &Binding)]) -> Result<usize, TypeError> {
        let schemes = self.group(bindings, &HashMap::new())?;
        let n = schemes.len();
        for (name, scheme) in schemes {
            self.locals.push(Local { name, scheme, visible: false });
        }
        Ok(n)
    }

    fn check(&mut self, e: &Expr, path: &Path, expected: &Type) -> Result<(), TypeError> {
        let found = self.infer(e, path)?;
        self.expect(path, expected, &found)
    }

    fn infer(&mut self, e: &Expr, path: &Path) -> Result<Type, TypeError> {
        let t = self.infer_inner(e, path)?;
        self.node_types.push((path.clone(), t.clone()));
        Ok(t)
    }

    fn infer_inner(&mut self, e: &Expr, path: &Path) -> Result<Type, TypeError> {
        match e {
            Expr::Int(_) => Ok(Type::Int),
            Expr::Bool(_) => Ok(Type::Bool),
            Expr::Var(v) => self.lookup(v, path),
            Expr::Hole(id) => {
                let t = self.fresh();
                let mut env: Vec<(String, Type)> = Vec::new();
                for l in self.locals.iter().filter(|l| l.visible && !is_hidden(&l.name)) {
                    env.retain(|(n, _)| *n != l.name);
                    env.push((l.name.clone(), l.scheme.ty.clone()));
                }
                self.hole_types.insert(*id, t.clone());
                self.hole_envs.insert(*id, env);
                Ok(t)
            }
            Expr::Lam(p, body) => {
                let a = self.fresh();
                self.locals.push(Local { name: p.clone(), scheme: Scheme::mono(a.clone()), visible: true });
                let r = self.infer(body, &path.child(0));
                self.locals.pop();
                Ok(Type::fun(a, r?))
            }
            Expr::App(f, a) => {
                let tf = self.infer(f, &path.child(0))?;
                let ta = self.infer(a, &path.child(1))?;
                match self.resolve(&tf) {
                    Type::Fun(param, res) => {
                        self.expect(&path.child(1), &param, &ta)?;
                        Ok(*res)
                    }
                    other => {
                        let r = self.fresh();
                        self.expect(&path.child(0), &Type::fun(ta, r.clone()), &other)?;
                        Ok(r)
                    }
                }
            }
            Expr::BinOp(op, l, r) => {
                let Type::Fun(x, rest) = self.instantiate(&op_scheme(*op)) else { unreachable!() };
                let Type::Fun(y, res) = *rest else { unreachable!() };
                let (x, y, res) = (*x, *y, *res);
                self.check(l, &path.child(0), &x)?;
                self.check(r, &path.child(1), &y)?;
                Ok(res)
            }
            Expr::OpRef(op) => Ok(self.instantiate(&op_scheme(*op))),
            Expr::List(es) => {
                let a = self.fresh();
                for (i, e) in es.iter().enumerate() {
                    self.check(e, &path.child(i), &a)?;
                }
                Ok(Type::list(a))
            }
            Expr::Range(lo, hi) => {
                self.check(lo, &path.child(0), &Type::Int)?;
                if let Some(hi) = hi {
                    self.check(hi, &path.child(1), &Type::Int)?;
                }
                Ok(Type::list(Type::Int))
            }
            Expr::Tuple(es) => {
                let mut ts = Vec::new();
                for (i, e) in es.iter().enumerate() {
                    ts.push(self.infer(e, &path.child(i))?);
                }
                Ok(Type::Tuple(ts))
            }
            Expr::Case(scrut, alts) => {
                let ts = self.infer(scrut, &path.child(0))?;
                let result = self.fresh();
                let mut next_child = 1;
                for alt in alts {
                    next_child = self.alt(alt, path, next_child, &ts, &result)?;
                }
                Ok(result)
            }
            Expr::Let(bs, body) => {
                let group: Vec<(Path, &Binding)> = bs.iter().enumerate().map(|(i, b)| (path.child(i + 1), b)).collect();
                let n = self.enter_group(&group)?;
                let t = self.infer(body, &path.child(0));
                self.locals.truncate(self.locals.len() - n);
                t
            }
        }
    }

    /// Checks one alternative whose first child index is `first`; returns
    /// the index after its last child.
    fn alt(&mut self, alt: &Alt, case_path: &Path, first: usize, scrut: &Type, result: &Type) -> Result<usize, TypeError> {
        let base = self.locals.len();
        let pt = self.pattern(&alt.pat)?;
        self.expect(&case_path.child(0), &pt, scrut)?;
        let rhs_len = match &alt.rhs {
            Rhs::Plain(_) => 1,
            Rhs::Guarded(gs) => gs.len() * 2,
        };
        let group: Vec<(Path, &Binding)> =
            alt.wheres.iter().enumerate().map(|(i, b)| (case_path.child(first + rhs_len + i), b)).collect();
        if let Err(e) = self.enter_group(&group) {
            self.locals.truncate(base);
            return Err(e);
        }
        let r = match &alt.rhs {
            Rhs::Plain(e) => self.check(e, &case_path.child(first), result),
            Rhs::Guarded(gs) => {
                let mut r = Ok(());
                for (k, (g, e)) in gs.iter().enumerate() {
                    r = self
                        .check(g, &case_path.child(first + 2 * k), &Type::Bool)
                        .and_then(|_| self.check(e, &case_path.child(first + 2 * k + 1), result));
                    if r.is_err() {
                        break;
                    }
                }
                r
            }
        };
        self.locals.truncate(base);
        r.map(|_| first + rhs_len + alt.wheres.len())
    }

    /// Type of a pattern; binds its variables as visible locals.
    fn pattern(&mut self, p: &Pattern) -> Result<Type, TypeError> {
        Ok(match p {
            Pattern::Var(v) => {
                let a = self.fresh();
                self.locals.push(Local { name: v.clone(), scheme: Scheme::mono(a.clone()), visible: true });
                a
            }
            Pattern::Wild => self.fresh(),
            Pattern::Int(_) => Type::Int,
            Pattern::Bool(_) => Type::Bool,
            Pattern::Nil => {
                let a = self.fresh();
                Type::list(a)
            }
            Pattern::Cons(h, t) => {
                let th = self.pattern(h)?;
                let tt = self.pattern(t)?;
                let want = Type::list(th);
                unify_in(&mut self.subst, &want, &tt).map_err(|_| TypeError::Mismatch {
                    path: Path::default(),
                    expected: self.resolve(&want),
                    found: self.resolve(&tt),
                })?;
                want
            }
            Pattern::Tuple(ps) => {
                let mut ts = Vec::new();
                for p in ps {
                    ts.push(self.pattern(p)?);
                }
                Type::Tuple(ts)
            }
        })
    }
}
