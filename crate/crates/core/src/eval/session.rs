//! Call-by-need machine. Thunks live in a per-session arena and are
//! addressed by index, so recursive environments need no reference cycles.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::model::ModelRunner;
use super::value::{Indeterminate, PartialResult, Value};
use super::Filling;
use crate::prelude::Prelude;
use crate::syntax::{is_hidden, Alt, Binding, Expr, HoleId, Op, Pattern, Rhs};

pub(crate) type ThunkId = u32;
pub(crate) type Origin<'a> = Option<&'a Expr>;

/// Steps allowed when forcing a value for inspection (hole environments,
/// recursive-call arguments) rather than as part of the program's result.
pub(crate) const GROUND_BUDGET: u64 = 5_000;
const SNAPSHOT_CELLS: usize = 1_000;
const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_SEGMENT: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Fail {
    Fuel,
    Loop,
    Error(Rc<str>),
}

type R<T> = Result<T, Fail>;

fn error<T>(msg: impl Into<String>) -> R<T> {
    Err(Fail::Error(Rc::from(msg.into())))
}

#[derive(Clone)]
pub(crate) struct Env<'a> {
    node: Option<Rc<EnvNode<'a>>>,
    scope: usize,
}

struct EnvNode<'a> {
    name: &'a str,
    thunk: ThunkId,
    /// Bound by a lambda or pattern (as opposed to a let or where).
    local: bool,
    next: Option<Rc<EnvNode<'a>>>,
}

impl<'a> Env<'a> {
    pub(crate) fn top(scope: usize) -> Env<'a> {
        Env { node: None, scope }
    }

    pub(crate) fn bind(&self, name: &'a str, thunk: ThunkId, local: bool) -> Env<'a> {
        Env { node: Some(Rc::new(EnvNode { name, thunk, local, next: self.node.clone() })), scope: self.scope }
    }
}

#[derive(Clone)]
pub(crate) enum Elim {
    App(ThunkId),
    Opaque,
}

pub(crate) struct Stuck<'a> {
    hole: HoleId,
    env: Env<'a>,
    elims: Vec<Elim>,
}

#[derive(Clone)]
pub(crate) enum RVal<'a> {
    Int(i64, Origin<'a>),
    Bool(bool, Origin<'a>),
    Nil(Origin<'a>),
    Cons(ThunkId, ThunkId, Origin<'a>),
    Tuple(Rc<[ThunkId]>),
    Closure(&'a str, &'a Expr, Env<'a>),
    Prim(Op, Rc<[ThunkId]>, Origin<'a>),
    Entry,
    Stuck(Rc<Stuck<'a>>),
}

enum Thunk<'a> {
    Delayed(&'a Expr, Env<'a>),
    Range(i64, Option<i64>, Origin<'a>),
    Apply(ThunkId, ThunkId),
    Prim(Op, ThunkId, ThunkId, Origin<'a>),
    Forcing,
    Done(RVal<'a>),
    Failed(Fail),
}

struct Scope<'a> {
    names: HashMap<&'a str, ThunkId>,
    parent: Option<usize>,
}

pub(crate) enum Hook<'a> {
    /// Calls to the entry function are answered by the model when the
    /// argument is strictly inside `root`, and by `student` otherwise;
    /// without `student`, other calls are errors.
    Oracle { student: Option<ThunkId>, model: &'a ModelRunner<'a>, root: Value },
    /// The entry function is known only on one input.
    Observed { input: Value, output: Value },
}

enum Match<'a> {
    Yes,
    No,
    Stuck(Rc<Stuck<'a>>),
}

/// Where a result first disagrees with an expected value.
pub(crate) struct Mismatch<'a> {
    pub own: Origin<'a>,
    /// Nearest enclosing list cell built by the inspected program.
    pub enclosing: Origin<'a>,
}

fn arity(op: Op) -> usize {
    if op == Op::Compose {
        3
    } else {
        2
    }
}

fn opaque<'a>(s: &Rc<Stuck<'a>>) -> RVal<'a> {
    if matches!(s.elims.last(), Some(Elim::Opaque)) {
        return RVal::Stuck(s.clone());
    }
    let mut elims = s.elims.clone();
    elims.push(Elim::Opaque);
    RVal::Stuck(Rc::new(Stuck { hole: s.hole, env: s.env.clone(), elims }))
}

pub(crate) struct Session<'a> {
    heap: Vec<Thunk<'a>>,
    scopes: Vec<Scope<'a>>,
    fuel: u64,
    fillings: Option<&'a Filling>,
    hook: Option<Hook<'a>>,
    pub recursive_calls: Vec<(Value, Value)>,
}

impl<'a> Session<'a> {
    /// A session whose scope 0 holds the library.
    pub(crate) fn new(prelude: &'a Prelude, fuel: u64) -> Session<'a> {
        let mut s = Session {
            heap: Vec::new(),
            scopes: Vec::new(),
            fuel,
            fillings: None,
            hook: None,
            recursive_calls: Vec::new(),
        };
        s.push_scope(None, &prelude.program.bindings);
        s
    }

    pub(crate) fn set_fillings(&mut self, f: &'a Filling) {
        self.fillings = Some(f);
    }

    /// Adds a scope of mutually recursive bindings on top of `parent`.
    pub(crate) fn push_scope(&mut self, parent: Option<usize>, bindings: &'a [Binding]) -> usize {
        let id = self.scopes.len();
        let env = Env::top(id);
        let mut names = HashMap::new();
        for b in bindings {
            let t = self.alloc(Thunk::Delayed(&b.body, env.clone()));
            names.insert(b.name.as_str(), t);
        }
        self.scopes.push(Scope { names, parent });
        id
    }

    /// Binds `name` in `scope` to the entry hook. Returns the thunk the
    /// name was bound to before, if any.
    pub(crate) fn install_hook(&mut self, scope: usize, name: &'a str, hook: impl FnOnce(Option<ThunkId>) -> Hook<'a>) {
        let previous = self.scopes[scope].names.get(name).copied();
        self.hook = Some(hook(previous));
        let t = self.alloc(Thunk::Done(RVal::Entry));
        self.scopes[scope].names.insert(name, t);
    }

    pub(crate) fn global(&self, scope: usize, name: &str) -> Option<ThunkId> {
        let mut cur = Some(scope);
        while let Some(s) = cur {
            if let Some(t) = self.scopes[s].names.get(name) {
                return Some(*t);
            }
            cur = self.scopes[s].parent;
        }
        None
    }

    fn alloc(&mut self, t: Thunk<'a>) -> ThunkId {
        self.heap.push(t);
        (self.heap.len() - 1) as ThunkId
    }

    fn alloc_val(&mut self, v: RVal<'a>) -> ThunkId {
        self.alloc(Thunk::Done(v))
    }

    pub(crate) fn alloc_result(&mut self, v: RVal<'a>) -> ThunkId {
        self.alloc_val(v)
    }

    pub(crate) fn inject(&mut self, v: &Value) -> ThunkId {
        let r = self.inject_whnf(v);
        self.alloc_val(r)
    }

    fn inject_whnf(&mut self, v: &Value) -> RVal<'a> {
        match v {
            Value::Int(n) => RVal::Int(*n, None),
            Value::Bool(b) => RVal::Bool(*b, None),
            Value::Tuple(vs) => RVal::Tuple(vs.iter().map(|v| self.inject(v)).collect()),
            Value::List(vs) => {
                let mut tail = RVal::Nil(None);
                for v in vs.iter().rev() {
                    let h = self.inject(v);
                    let t = self.alloc_val(tail);
                    tail = RVal::Cons(h, t, None);
                }
                tail
            }
        }
    }

    /// Binds values as lambda-bound variables on top of `scope`.
    pub(crate) fn env_of(&mut self, scope: usize, vars: &'a [(String, Value)]) -> Env<'a> {
        let mut env = Env::top(scope);
        for (n, v) in vars {
            let t = self.inject(v);
            env = env.bind(n, t, true);
        }
        env
    }

    fn tick(&mut self) -> R<()> {
        if self.fuel == 0 {
            return Err(Fail::Fuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn lookup(&self, name: &str, env: &Env<'a>) -> R<ThunkId> {
        let mut cur = env.node.as_ref();
        while let Some(n) = cur {
            if n.name == name {
                return Ok(n.thunk);
            }
            cur = n.next.as_ref();
        }
        match self.global(env.scope, name) {
            Some(t) => Ok(t),
            None => error(format!("unbound variable {name}")),
        }
    }

    fn delay(&mut self, e: &'a Expr, env: &Env<'a>) -> R<ThunkId> {
        match e {
            Expr::Var(v) => self.lookup(v, env),
            Expr::Int(n) => Ok(self.alloc_val(RVal::Int(*n, Some(e)))),
            Expr::Bool(b) => Ok(self.alloc_val(RVal::Bool(*b, Some(e)))),
            _ => Ok(self.alloc(Thunk::Delayed(e, env.clone()))),
        }
    }

    pub(crate) fn force(&mut self, t: ThunkId) -> R<RVal<'a>> {
        let slot = t as usize;
        match &self.heap[slot] {
            Thunk::Done(v) => return Ok(v.clone()),
            Thunk::Failed(f) => return Err(f.clone()),
            Thunk::Forcing => return Err(Fail::Loop),
            _ => {}
        }
        let pending = std::mem::replace(&mut self.heap[slot], Thunk::Forcing);
        let r = self.run(&pending);
        self.heap[slot] = match &r {
            Ok(v) => Thunk::Done(v.clone()),
            Err(Fail::Fuel) => pending,
            Err(f) => Thunk::Failed(f.clone()),
        };
        r
    }

    fn run(&mut self, t: &Thunk<'a>) -> R<RVal<'a>> {
        match t {
            Thunk::Delayed(e, env) => self.eval(e, env),
            Thunk::Range(lo, hi, o) => self.range(*lo, *hi, *o),
            Thunk::Apply(f, x) => {
                let fv = self.force(*f)?;
                self.apply(fv, *x)
            }
            Thunk::Prim(op, a, b, o) => self.prim(*op, &[*a, *b], *o),
            Thunk::Forcing | Thunk::Done(_) | Thunk::Failed(_) => unreachable!("handled by force"),
        }
    }

    pub(crate) fn eval(&mut self, e: &'a Expr, env: &Env<'a>) -> R<RVal<'a>> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.eval_inner(e, env))
    }

    fn eval_inner(&mut self, e: &'a Expr, env: &Env<'a>) -> R<RVal<'a>> {
        // Constructors cost nothing; `apply` charges for applications.
        if matches!(e, Expr::BinOp(..) | Expr::Range(..) | Expr::Case(..) | Expr::Let(..)) {
            self.tick()?;
        }
        match e {
            Expr::Int(n) => Ok(RVal::Int(*n, Some(e))),
            Expr::Bool(b) => Ok(RVal::Bool(*b, Some(e))),
            Expr::Var(v) => {
                let t = self.lookup(v, env)?;
                self.force(t)
            }
            Expr::Hole(id) => match self.fillings.and_then(|f| f.get(id)) {
                Some(fill) => self.eval(fill, env),
                None => Ok(RVal::Stuck(Rc::new(Stuck { hole: *id, env: env.clone(), elims: vec![] }))),
            },
            Expr::Lam(p, b) => Ok(RVal::Closure(p, b, env.clone())),
            Expr::App(f, a) => {
                let fv = self.eval(f, env)?;
                let at = self.delay(a, env)?;
                self.apply(fv, at)
            }
            Expr::BinOp(op, l, r) => {
                let a = self.delay(l, env)?;
                let b = self.delay(r, env)?;
                match op {
                    Op::Compose => Ok(RVal::Prim(*op, Rc::from([a, b]), Some(e))),
                    _ => self.prim(*op, &[a, b], Some(e)),
                }
            }
            Expr::OpRef(op) => Ok(RVal::Prim(*op, Rc::from([]), Some(e))),
            Expr::List(es) => {
                let mut tail = RVal::Nil(Some(e));
                for item in es.iter().rev() {
                    let h = self.delay(item, env)?;
                    let t = self.alloc_val(tail);
                    tail = RVal::Cons(h, t, Some(e));
                }
                Ok(tail)
            }
            Expr::Range(lo, hi) => {
                let lo = match self.eval_int(lo, env)? {
                    Ok(n) => n,
                    Err(s) => return Ok(opaque(&s)),
                };
                let hi = match hi {
                    Some(hi) => match self.eval_int(hi, env)? {
                        Ok(n) => Some(n),
                        Err(s) => return Ok(opaque(&s)),
                    },
                    None => None,
                };
                self.range(lo, hi, Some(e))
            }
            Expr::Tuple(es) => {
                let mut ts = Vec::with_capacity(es.len());
                for item in es {
                    ts.push(self.delay(item, env)?);
                }
                Ok(RVal::Tuple(ts.into()))
            }
            Expr::Case(s, alts) => self.case(s, alts, env),
            Expr::Let(bs, body) => {
                let env = self.letrec(bs, env);
                self.eval(body, &env)
            }
        }
    }

    fn eval_int(&mut self, e: &'a Expr, env: &Env<'a>) -> R<Result<i64, Rc<Stuck<'a>>>> {
        match self.eval(e, env)? {
            RVal::Int(n, _) => Ok(Ok(n)),
            RVal::Stuck(s) => Ok(Err(s)),
            _ => error("expected an integer"),
        }
    }

    fn range(&mut self, lo: i64, hi: Option<i64>, o: Origin<'a>) -> R<RVal<'a>> {
        if hi.is_some_and(|hi| lo > hi) {
            return Ok(RVal::Nil(o));
        }
        let h = self.alloc_val(RVal::Int(lo, o));
        let next = lo.checked_add(1).map_or_else(|| error("integer overflow"), Ok)?;
        let t = self.alloc(Thunk::Range(next, hi, o));
        Ok(RVal::Cons(h, t, o))
    }

    fn letrec(&mut self, bs: &'a [Binding], env: &Env<'a>) -> Env<'a> {
        let ids: Vec<ThunkId> = bs.iter().map(|_| self.alloc(Thunk::Forcing)).collect();
        let mut out = env.clone();
        for (b, id) in bs.iter().zip(&ids) {
            out = out.bind(&b.name, *id, false);
        }
        for (b, id) in bs.iter().zip(&ids) {
            self.heap[*id as usize] = Thunk::Delayed(&b.body, out.clone());
        }
        out
    }

    pub(crate) fn apply(&mut self, f: RVal<'a>, arg: ThunkId) -> R<RVal<'a>> {
        self.tick()?;
        match f {
            RVal::Closure(p, body, env) => {
                let env = env.bind(p, arg, true);
                self.eval(body, &env)
            }
            RVal::Prim(op, args, o) => {
                let mut all = args.to_vec();
                all.push(arg);
                if all.len() < arity(op) {
                    Ok(RVal::Prim(op, all.into(), o))
                } else {
                    self.prim(op, &all, o)
                }
            }
            RVal::Stuck(s) => {
                if matches!(s.elims.last(), Some(Elim::Opaque)) {
                    return Ok(RVal::Stuck(s));
                }
                let mut elims = s.elims.clone();
                elims.push(Elim::App(arg));
                Ok(RVal::Stuck(Rc::new(Stuck { hole: s.hole, env: s.env.clone(), elims })))
            }
            RVal::Entry => self.entry_apply(arg),
            _ => error("applied a value that is not a function"),
        }
    }

    fn entry_apply(&mut self, arg: ThunkId) -> R<RVal<'a>> {
        match &self.hook {
            Some(Hook::Observed { input, output }) => {
                let (input, output) = (input.clone(), output.clone());
                match self.ground_within(arg, GROUND_BUDGET)? {
                    Some(v) if v == input => Ok(self.inject_whnf(&output)),
                    Some(v) => error(format!("no observed output for input {v}")),
                    None => error("observed function applied to a non-value"),
                }
            }
            Some(Hook::Oracle { student, model, root }) => {
                let (student, model, root) = (*student, *model, root.clone());
                if let Some(v) = self.ground_within(arg, GROUND_BUDGET)? {
                    if v.is_strict_part_of(&root) {
                        return match model.run(&v) {
                            Ok(out) => {
                                self.recursive_calls.push((v, out.clone()));
                                Ok(self.inject_whnf(&out))
                            }
                            Err(e) => error(format!("model solution failed: {e}")),
                        };
                    }
                }
                let Some(student) = student else {
                    return error("recursive call on an argument that is not smaller");
                };
                let f = self.force(student)?;
                self.apply(f, arg)
            }
            None => error("entry hook missing"),
        }
    }

    fn prim(&mut self, op: Op, args: &[ThunkId], o: Origin<'a>) -> R<RVal<'a>> {
        match op {
            Op::Cons => Ok(RVal::Cons(args[0], args[1], o)),
            Op::Append => match self.force(args[0])? {
                RVal::Nil(_) => self.force(args[1]),
                RVal::Cons(h, t, _) => {
                    let rest = self.alloc(Thunk::Prim(Op::Append, t, args[1], o));
                    Ok(RVal::Cons(h, rest, o))
                }
                RVal::Stuck(s) => Ok(opaque(&s)),
                _ => error("expected a list"),
            },
            Op::Add | Op::Sub | Op::Mul => {
                let a = match self.force(args[0])? {
                    RVal::Int(n, _) => n,
                    RVal::Stuck(s) => return Ok(opaque(&s)),
                    _ => return error("expected an integer"),
                };
                let b = match self.force(args[1])? {
                    RVal::Int(n, _) => n,
                    RVal::Stuck(s) => return Ok(opaque(&s)),
                    _ => return error("expected an integer"),
                };
                let r = match op {
                    Op::Add => a.checked_add(b),
                    Op::Sub => a.checked_sub(b),
                    _ => a.checked_mul(b),
                };
                match r {
                    Some(n) => Ok(RVal::Int(n, o)),
                    None => error("integer overflow"),
                }
            }
            Op::Eq | Op::Neq | Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                let ord = match self.compare(args[0], args[1])? {
                    Ok(ord) => ord,
                    Err(s) => return Ok(opaque(&s)),
                };
                let b = match op {
                    Op::Eq => ord == Ordering::Equal,
                    Op::Neq => ord != Ordering::Equal,
                    Op::Lt => ord == Ordering::Less,
                    Op::Le => ord != Ordering::Greater,
                    Op::Gt => ord == Ordering::Greater,
                    _ => ord != Ordering::Less,
                };
                Ok(RVal::Bool(b, o))
            }
            Op::And | Op::Or => {
                let short = op == Op::Or;
                match self.force(args[0])? {
                    RVal::Bool(b, _) if b == short => Ok(RVal::Bool(b, o)),
                    RVal::Bool(..) => match self.force(args[1])? {
                        RVal::Bool(b, _) => Ok(RVal::Bool(b, o)),
                        RVal::Stuck(s) => Ok(opaque(&s)),
                        _ => error("expected a boolean"),
                    },
                    RVal::Stuck(s) => Ok(opaque(&s)),
                    _ => error("expected a boolean"),
                }
            }
            Op::Compose => {
                let f = self.force(args[0])?;
                let gx = self.alloc(Thunk::Apply(args[1], args[2]));
                self.apply(f, gx)
            }
            Op::Apply => {
                let f = self.force(args[0])?;
                self.apply(f, args[1])
            }
        }
    }

    /// Structural ordering; lists compare lexicographically.
    fn compare(&mut self, a: ThunkId, b: ThunkId) -> R<Result<Ordering, Rc<Stuck<'a>>>> {
        let (mut a, mut b) = (a, b);
        loop {
            self.tick()?;
            let x = self.force(a)?;
            let y = self.force(b)?;
            match (x, y) {
                (RVal::Stuck(s), _) | (_, RVal::Stuck(s)) => return Ok(Err(s)),
                (RVal::Int(m, _), RVal::Int(n, _)) => return Ok(Ok(m.cmp(&n))),
                (RVal::Bool(m, _), RVal::Bool(n, _)) => return Ok(Ok(m.cmp(&n))),
                (RVal::Nil(_), RVal::Nil(_)) => return Ok(Ok(Ordering::Equal)),
                (RVal::Nil(_), RVal::Cons(..)) => return Ok(Ok(Ordering::Less)),
                (RVal::Cons(..), RVal::Nil(_)) => return Ok(Ok(Ordering::Greater)),
                (RVal::Cons(h1, t1, _), RVal::Cons(h2, t2, _)) => {
                    match stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.compare(h1, h2))? {
                        Ok(Ordering::Equal) => {}
                        other => return Ok(other),
                    }
                    a = t1;
                    b = t2;
                }
                (RVal::Tuple(xs), RVal::Tuple(ys)) => {
                    for (x, y) in xs.iter().zip(ys.iter()) {
                        match self.compare(*x, *y)? {
                            Ok(Ordering::Equal) => {}
                            other => return Ok(other),
                        }
                    }
                    return Ok(Ok(Ordering::Equal));
                }
                (RVal::Closure(..) | RVal::Prim(..) | RVal::Entry, _) | (_, RVal::Closure(..) | RVal::Prim(..) | RVal::Entry) => {
                    return error("cannot compare functions")
                }
                _ => return error("compared values of different shapes"),
            }
        }
    }

    fn case(&mut self, scrut: &'a Expr, alts: &'a [Alt], env: &Env<'a>) -> R<RVal<'a>> {
        let st = self.delay(scrut, env)?;
        for alt in alts {
            let mut binds = Vec::new();
            match self.matches(&alt.pat, st, &mut binds)? {
                Match::No => continue,
                Match::Stuck(s) => return Ok(opaque(&s)),
                Match::Yes => {}
            }
            let mut inner = env.clone();
            for (n, t) in binds {
                inner = inner.bind(n, t, true);
            }
            if !alt.wheres.is_empty() {
                inner = self.letrec(&alt.wheres, &inner);
            }
            match &alt.rhs {
                Rhs::Plain(e) => return self.eval(e, &inner),
                Rhs::Guarded(gs) => {
                    for (g, body) in gs {
                        match self.eval(g, &inner)? {
                            RVal::Bool(true, _) => return self.eval(body, &inner),
                            RVal::Bool(false, _) => {}
                            RVal::Stuck(s) => return Ok(opaque(&s)),
                            _ => return error("guard is not a boolean"),
                        }
                    }
                }
            }
        }
        error("no case alternative matches")
    }

    fn matches(&mut self, p: &'a Pattern, t: ThunkId, binds: &mut Vec<(&'a str, ThunkId)>) -> R<Match<'a>> {
        match p {
            Pattern::Var(v) => {
                binds.push((v, t));
                Ok(Match::Yes)
            }
            Pattern::Wild => Ok(Match::Yes),
            Pattern::Int(n) => match self.force(t)? {
                RVal::Int(m, _) => Ok(if m == *n { Match::Yes } else { Match::No }),
                RVal::Stuck(s) => Ok(Match::Stuck(s)),
                _ => error("expected an integer"),
            },
            Pattern::Bool(b) => match self.force(t)? {
                RVal::Bool(c, _) => Ok(if c == *b { Match::Yes } else { Match::No }),
                RVal::Stuck(s) => Ok(Match::Stuck(s)),
                _ => error("expected a boolean"),
            },
            Pattern::Nil => match self.force(t)? {
                RVal::Nil(_) => Ok(Match::Yes),
                RVal::Cons(..) => Ok(Match::No),
                RVal::Stuck(s) => Ok(Match::Stuck(s)),
                _ => error("expected a list"),
            },
            Pattern::Cons(hp, tp) => match self.force(t)? {
                RVal::Cons(h, tl, _) => match self.matches(hp, h, binds)? {
                    Match::Yes => self.matches(tp, tl, binds),
                    other => Ok(other),
                },
                RVal::Nil(_) => Ok(Match::No),
                RVal::Stuck(s) => Ok(Match::Stuck(s)),
                _ => error("expected a list"),
            },
            Pattern::Tuple(ps) => match self.force(t)? {
                RVal::Tuple(ts) if ts.len() == ps.len() => {
                    for (p, t) in ps.iter().zip(ts.iter()) {
                        match self.matches(p, *t, binds)? {
                            Match::Yes => {}
                            other => return Ok(other),
                        }
                    }
                    Ok(Match::Yes)
                }
                RVal::Stuck(s) => Ok(Match::Stuck(s)),
                _ => error("expected a tuple"),
            },
        }
    }

    /// Forces `t` completely. `Err(stuck)` when a hole is in the way.
    pub(crate) fn deep(&mut self, t: ThunkId) -> R<Result<Value, Rc<Stuck<'a>>>> {
        Ok(Ok(match self.force(t)? {
            RVal::Int(n, _) => Value::Int(n),
            RVal::Bool(b, _) => Value::Bool(b),
            RVal::Nil(_) => Value::List(vec![]),
            RVal::Cons(h, tl, _) => {
                let mut items = Vec::new();
                let (mut h, mut tl) = (h, tl);
                loop {
                    self.tick()?;
                    match stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.deep(h))? {
                        Ok(v) => items.push(v),
                        Err(s) => return Ok(Err(s)),
                    }
                    match self.force(tl)? {
                        RVal::Nil(_) => break,
                        RVal::Cons(h2, t2, _) => {
                            h = h2;
                            tl = t2;
                        }
                        RVal::Stuck(s) => return Ok(Err(s)),
                        _ => return error("malformed list"),
                    }
                }
                Value::List(items)
            }
            RVal::Tuple(ts) => {
                let mut items = Vec::new();
                for t in ts.iter() {
                    match self.deep(*t)? {
                        Ok(v) => items.push(v),
                        Err(s) => return Ok(Err(s)),
                    }
                }
                Value::Tuple(items)
            }
            RVal::Stuck(s) => return Ok(Err(s)),
            RVal::Closure(..) | RVal::Prim(..) | RVal::Entry => return error("a function is not a value"),
        }))
    }

    /// Forces `t` to a value spending at most `budget` steps. `None` when
    /// that fails for any reason other than the session running dry.
    pub(crate) fn ground_within(&mut self, t: ThunkId, budget: u64) -> R<Option<Value>> {
        let saved = self.fuel;
        let sub = saved.min(budget);
        self.fuel = sub;
        let r = self.deep(t);
        let used = sub - self.fuel;
        self.fuel = saved - used;
        match r {
            Ok(Ok(v)) => Ok(Some(v)),
            Err(Fail::Fuel) if self.fuel == 0 => Err(Fail::Fuel),
            _ => Ok(None),
        }
    }

    /// Forces as much of `t` as the fuel allows and reads it back.
    pub(crate) fn snapshot(&mut self, t: ThunkId) -> PartialResult {
        let mut cells = SNAPSHOT_CELLS;
        self.snap(t, &mut cells)
    }

    fn snap_forced(&mut self, r: R<RVal<'a>>, cells: &mut usize) -> Result<RVal<'a>, PartialResult> {
        match r {
            Ok(v) => Ok(v),
            Err(Fail::Error(m)) => Err(PartialResult::Error(m.to_string())),
            Err(_) => Err(PartialResult::Unforced),
        }
        .and_then(|v| match v {
            RVal::Cons(..) => {
                if *cells == 0 {
                    return Err(PartialResult::Unforced);
                }
                *cells -= 1;
                Ok(v)
            }
            v => Ok(v),
        })
    }

    fn snap(&mut self, t: ThunkId, cells: &mut usize) -> PartialResult {
        let forced = self.force(t);
        let v = match self.snap_forced(forced, cells) {
            Ok(v) => v,
            Err(p) => return p,
        };
        match v {
            RVal::Cons(h, tl, _) => {
                let mut heads = vec![stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.snap(h, cells))];
                let mut tl = tl;
                let end = loop {
                    let forced = self.force(tl);
                    match self.snap_forced(forced, cells) {
                        Ok(RVal::Cons(h2, t2, _)) => {
                            heads.push(stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.snap(h2, cells)));
                            tl = t2;
                        }
                        Ok(other) => break self.leaf(other, cells),
                        Err(p) => break p,
                    }
                };
                heads.into_iter().rev().fold(end, |acc, h| PartialResult::Cons(Box::new(h), Box::new(acc)))
            }
            other => self.leaf(other, cells),
        }
    }

    fn leaf(&mut self, v: RVal<'a>, cells: &mut usize) -> PartialResult {
        match v {
            RVal::Int(n, _) => PartialResult::Int(n),
            RVal::Bool(b, _) => PartialResult::Bool(b),
            RVal::Nil(_) => PartialResult::Nil,
            RVal::Tuple(ts) => PartialResult::Tuple(ts.iter().map(|t| self.snap(*t, cells)).collect()),
            RVal::Closure(..) | RVal::Prim(..) | RVal::Entry => PartialResult::Function,
            RVal::Stuck(s) => PartialResult::Indeterminate(Box::new(self.indeterminate(&s))),
            RVal::Cons(..) => unreachable!("lists are read back by snap"),
        }
    }

    fn indeterminate(&mut self, s: &Stuck<'a>) -> Indeterminate {
        let opaque = matches!(s.elims.last(), Some(Elim::Opaque));
        let mut args = Some(Vec::new());
        for e in &s.elims {
            if let Elim::App(t) = e {
                let v = self.ground_within(*t, GROUND_BUDGET).ok().flatten();
                match (v, args.as_mut()) {
                    (Some(v), Some(a)) => a.push(v),
                    _ => args = None,
                }
            }
        }
        let env = if opaque { None } else { self.visible_env(&s.env) };
        Indeterminate { hole: s.hole, env, args, opaque }
    }

    /// Values of the lambda- and pattern-bound names in `env`, outermost
    /// first, or `None` when one of them is not a value.
    fn visible_env(&mut self, env: &Env<'a>) -> Option<Vec<(String, Value)>> {
        let mut seen = HashSet::new();
        let mut names = Vec::new();
        let mut cur = env.node.as_ref();
        while let Some(n) = cur {
            if seen.insert(n.name) && n.local && !is_hidden(n.name) {
                names.push((n.name, n.thunk));
            }
            cur = n.next.as_ref();
        }
        let mut out = Vec::with_capacity(names.len());
        for (name, t) in names.into_iter().rev() {
            let v = self.ground_within(t, GROUND_BUDGET).ok().flatten()?;
            out.push((name.to_string(), v));
        }
        Some(out)
    }

    /// First disagreement between `t` and `expected`, walking in
    /// evaluation order. Holes never disagree.
    pub(crate) fn first_mismatch(
        &mut self,
        t: ThunkId,
        expected: &Value,
        enclosing: Origin<'a>,
        is_student: &dyn Fn(&Expr) -> bool,
    ) -> Option<Mismatch<'a>> {
        let here = |own: Origin<'a>| Some(Mismatch { own, enclosing });
        let v = match self.force(t) {
            Ok(v) => v,
            Err(_) => return here(None),
        };
        match (v, expected) {
            (RVal::Stuck(_), _) => None,
            (RVal::Int(n, o), Value::Int(m)) => (n != *m).then_some(Mismatch { own: o, enclosing }),
            (RVal::Bool(b, o), Value::Bool(c)) => (b != *c).then_some(Mismatch { own: o, enclosing }),
            (RVal::Nil(o), Value::List(items)) => (!items.is_empty()).then_some(Mismatch { own: o, enclosing }),
            (RVal::Cons(h, tl, o), Value::List(items)) => {
                let Some((first, rest)) = items.split_first() else { return here(o) };
                let inner = if o.is_some_and(is_student) { o } else { enclosing };
                if let Some(m) = self.first_mismatch(h, first, inner, is_student) {
                    return Some(m);
                }
                let rest = Value::List(rest.to_vec());
                self.first_mismatch(tl, &rest, inner, is_student)
            }
            (RVal::Tuple(ts), Value::Tuple(vs)) => {
                ts.iter().zip(vs).find_map(|(t, v)| self.first_mismatch(*t, v, enclosing, is_student))
            }
            _ => here(None),
        }
    }
}
