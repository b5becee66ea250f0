//! A small call-by-need interpreter written directly over the AST, used as
//! an independent oracle for the engine's evaluator. Environments are
//! persistent linked lists and thunks update in place.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::rc::Rc;

use tutor_core::eval::Value;
use tutor_core::prelude::prelude;
use tutor_core::syntax::{Alt, Binding, Expr, Op, Pattern, Program, Rhs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefError {
    Fuel,
    Loop,
    Failed(String),
}

type R<T> = Result<T, RefError>;

fn fail<T>(msg: impl Into<String>) -> R<T> {
    Err(RefError::Failed(msg.into()))
}

#[derive(Clone)]
enum V<'a> {
    Int(i64),
    Bool(bool),
    Nil,
    Cons(Th<'a>, Th<'a>),
    Tuple(Vec<Th<'a>>),
    Lam(&'a str, &'a Expr, Env<'a>),
    /// An operator section waiting for its arguments.
    Op(Op, Vec<Th<'a>>),
}

enum State<'a> {
    Expr(&'a Expr, Env<'a>),
    Apply(Th<'a>, Th<'a>),
    Op(Op, Th<'a>, Th<'a>),
    From(i64, Option<i64>),
    Busy,
    Done(V<'a>),
}

type Th<'a> = Rc<RefCell<State<'a>>>;

fn th(s: State<'_>) -> Th<'_> {
    Rc::new(RefCell::new(s))
}

enum Frame<'a> {
    Empty,
    Bind(&'a str, Th<'a>, Env<'a>),
    /// A recursive group: names are looked up in the group itself.
    Group(Group<'a>, Env<'a>),
}

#[derive(Clone)]
pub struct Env<'a>(Rc<Frame<'a>>);

impl<'a> Env<'a> {
    fn empty() -> Env<'a> {
        Env(Rc::new(Frame::Empty))
    }

    fn bind(&self, name: &'a str, t: Th<'a>) -> Env<'a> {
        Env(Rc::new(Frame::Bind(name, t, self.clone())))
    }

    fn lookup(&self, name: &str) -> Option<Th<'a>> {
        let mut cur = self;
        loop {
            match &*cur.0 {
                Frame::Empty => return None,
                Frame::Bind(n, t, up) => {
                    if *n == name {
                        return Some(t.clone());
                    }
                    cur = up;
                }
                Frame::Group(g, up) => {
                    if let Some((_, t)) = g.borrow().iter().find(|(n, _)| *n == name) {
                        return Some(t.clone());
                    }
                    cur = up;
                }
            }
        }
    }

}

type Group<'a> = Rc<RefCell<Vec<(&'a str, Th<'a>)>>>;

pub struct Interp<'a> {
    fuel: Cell<u64>,
    globals: Env<'a>,
    /// Every recursive group made, emptied on drop to break the cycles.
    groups: RefCell<Vec<Group<'a>>>,
}

impl Drop for Interp<'_> {
    fn drop(&mut self) {
        for g in self.groups.borrow().iter() {
            g.borrow_mut().clear();
        }
    }
}

impl<'a> Interp<'a> {
    /// Library bindings, then `program` on top of them.
    pub fn new(program: &'a Program, fuel: u64) -> Interp<'a> {
        let mut i = Interp { fuel: Cell::new(fuel), globals: Env::empty(), groups: RefCell::new(Vec::new()) };
        let lib = i.letrec(&Env::empty(), &prelude().program.bindings);
        i.globals = i.letrec(&lib, &program.bindings);
        i
    }

    fn letrec(&self, up: &Env<'a>, bindings: &'a [Binding]) -> Env<'a> {
        let group: Group<'a> = Rc::new(RefCell::new(Vec::new()));
        let env = Env(Rc::new(Frame::Group(group.clone(), up.clone())));
        for b in bindings {
            group.borrow_mut().push((b.name.as_str(), th(State::Expr(&b.body, env.clone()))));
        }
        self.groups.borrow_mut().push(group);
        env
    }

    /// Applies the top-level `name` to `input` and evaluates the result fully.
    pub fn call(&self, name: &str, input: &Value) -> R<Value> {
        let f = self.globals.lookup(name).ok_or_else(|| RefError::Failed(format!("unbound {name}")))?;
        let f = self.force(&f)?;
        let v = self.apply(f, inject(input))?;
        self.deep(v)
    }

    /// Evaluates `e` under the globals, with `vars` bound, applied to `args`.
    pub fn eval_applied(&self, e: &'a Expr, vars: &[(&'a str, Value)], args: &[Value]) -> R<Value> {
        let mut env = self.globals.clone();
        for (n, v) in vars {
            env = env.bind(n, inject(v));
        }
        let mut v = self.eval(e, &env)?;
        for a in args {
            v = self.apply(v, inject(a))?;
        }
        self.deep(v)
    }

    fn tick(&self) -> R<()> {
        let f = self.fuel.get();
        if f == 0 {
            return Err(RefError::Fuel);
        }
        self.fuel.set(f - 1);
        Ok(())
    }

    fn force(&self, t: &Th<'a>) -> R<V<'a>> {
        let state = std::mem::replace(&mut *t.borrow_mut(), State::Busy);
        let v = match state {
            State::Done(v) => {
                *t.borrow_mut() = State::Done(v.clone());
                return Ok(v);
            }
            State::Busy => return Err(RefError::Loop),
            State::Expr(e, env) => self.eval(e, &env),
            State::Apply(f, x) => self.force(&f).and_then(|f| self.apply(f, x)),
            State::Op(op, l, r) => self.binop(op, l, r),
            State::From(lo, hi) => Ok(range(lo, hi)),
        }?;
        *t.borrow_mut() = State::Done(v.clone());
        Ok(v)
    }

    fn delay(&self, e: &'a Expr, env: &Env<'a>) -> Th<'a> {
        match e {
            Expr::Int(n) => th(State::Done(V::Int(*n))),
            Expr::Var(x) => env.lookup(x).unwrap_or_else(|| th(State::Expr(e, env.clone()))),
            _ => th(State::Expr(e, env.clone())),
        }
    }

    fn eval(&self, e: &'a Expr, env: &Env<'a>) -> R<V<'a>> {
        self.tick()?;
        match e {
            Expr::Int(n) => Ok(V::Int(*n)),
            Expr::Bool(b) => Ok(V::Bool(*b)),
            Expr::Var(x) => match env.lookup(x) {
                Some(t) => self.force(&t),
                None => fail(format!("unbound {x}")),
            },
            Expr::Hole(h) => fail(format!("hole ?{h}")),
            Expr::Lam(x, body) => Ok(V::Lam(x, body, env.clone())),
            Expr::App(f, a) => {
                let fv = self.eval(f, env)?;
                self.apply(fv, self.delay(a, env))
            }
            Expr::BinOp(op, l, r) => {
                let (l, r) = (self.delay(l, env), self.delay(r, env));
                match op {
                    Op::Compose => Ok(V::Op(Op::Compose, vec![l, r])),
                    _ => self.binop(*op, l, r),
                }
            }
            Expr::OpRef(op) => Ok(V::Op(*op, vec![])),
            Expr::List(es) => {
                let mut out = V::Nil;
                for e in es.iter().rev() {
                    out = V::Cons(self.delay(e, env), th(State::Done(out)));
                }
                Ok(out)
            }
            Expr::Tuple(es) => Ok(V::Tuple(es.iter().map(|e| self.delay(e, env)).collect())),
            Expr::Range(lo, hi) => {
                let lo = self.int(&self.delay(lo, env))?;
                let hi = match hi {
                    Some(h) => Some(self.int(&self.delay(h, env))?),
                    None => None,
                };
                Ok(range(lo, hi))
            }
            Expr::Let(bs, body) => self.eval(body, &self.letrec(env, bs)),
            Expr::Case(s, alts) => {
                let scrut = self.delay(s, env);
                self.case(&scrut, alts, env)
            }
        }
    }

    fn case(&self, scrut: &Th<'a>, alts: &'a [Alt], env: &Env<'a>) -> R<V<'a>> {
        for alt in alts {
            let Some(binds) = self.matches(&alt.pat, scrut)? else { continue };
            let mut inner = env.clone();
            for (n, t) in binds {
                inner = inner.bind(n, t);
            }
            if !alt.wheres.is_empty() {
                inner = self.letrec(&inner, &alt.wheres);
            }
            match &alt.rhs {
                Rhs::Plain(body) => return self.eval(body, &inner),
                Rhs::Guarded(gs) => {
                    for (g, body) in gs {
                        if self.bool(&self.delay(g, &inner))? {
                            return self.eval(body, &inner);
                        }
                    }
                }
            }
        }
        fail("no alternative")
    }

    fn matches(&self, p: &'a Pattern, t: &Th<'a>) -> R<Option<Vec<(&'a str, Th<'a>)>>> {
        let mut out = Vec::new();
        Ok(self.match_into(p, t, &mut out)?.then_some(out))
    }

    fn match_into(&self, p: &'a Pattern, t: &Th<'a>, out: &mut Vec<(&'a str, Th<'a>)>) -> R<bool> {
        match p {
            Pattern::Var(x) => {
                out.push((x, t.clone()));
                Ok(true)
            }
            Pattern::Wild => Ok(true),
            Pattern::Int(n) => Ok(matches!(self.force(t)?, V::Int(m) if m == *n)),
            Pattern::Bool(b) => Ok(matches!(self.force(t)?, V::Bool(c) if c == *b)),
            Pattern::Nil => Ok(matches!(self.force(t)?, V::Nil)),
            Pattern::Cons(hp, tp) => match self.force(t)? {
                V::Cons(h, tl) => Ok(self.match_into(hp, &h, out)? && self.match_into(tp, &tl, out)?),
                _ => Ok(false),
            },
            Pattern::Tuple(ps) => match self.force(t)? {
                V::Tuple(ts) if ts.len() == ps.len() => {
                    for (p, t) in ps.iter().zip(&ts) {
                        if !self.match_into(p, t, out)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                _ => Ok(false),
            },
        }
    }

    fn apply(&self, f: V<'a>, x: Th<'a>) -> R<V<'a>> {
        self.tick()?;
        match f {
            V::Lam(name, body, env) => self.eval(body, &env.bind(name, x)),
            V::Op(Op::Compose, args) if args.len() == 2 => {
                let g = th(State::Apply(args[1].clone(), x));
                let f = self.force(&args[0])?;
                self.apply(f, g)
            }
            V::Op(Op::Apply, mut args) if args.len() == 1 => {
                let f = self.force(&args.remove(0))?;
                self.apply(f, x)
            }
            V::Op(op, mut args) => {
                args.push(x);
                if args.len() == 2 && op != Op::Compose {
                    let r = args.pop().unwrap();
                    let l = args.pop().unwrap();
                    self.binop(op, l, r)
                } else {
                    Ok(V::Op(op, args))
                }
            }
            _ => fail("applied a non-function"),
        }
    }

    fn int(&self, t: &Th<'a>) -> R<i64> {
        match self.force(t)? {
            V::Int(n) => Ok(n),
            _ => fail("expected an integer"),
        }
    }

    fn bool(&self, t: &Th<'a>) -> R<bool> {
        match self.force(t)? {
            V::Bool(b) => Ok(b),
            _ => fail("expected a boolean"),
        }
    }

    fn binop(&self, op: Op, l: Th<'a>, r: Th<'a>) -> R<V<'a>> {
        let arith = |f: fn(i64, i64) -> Option<i64>| -> R<V<'a>> {
            let (a, b) = (self.int(&l)?, self.int(&r)?);
            f(a, b).map(V::Int).ok_or_else(|| RefError::Failed("overflow".into()))
        };
        match op {
            Op::Cons => Ok(V::Cons(l, r)),
            Op::Append => match self.force(&l)? {
                V::Nil => self.force(&r),
                V::Cons(h, t) => Ok(V::Cons(h, th(State::Op(Op::Append, t, r)))),
                _ => fail("append of a non-list"),
            },
            Op::Add => arith(i64::checked_add),
            Op::Sub => arith(i64::checked_sub),
            Op::Mul => arith(i64::checked_mul),
            Op::Eq => Ok(V::Bool(self.compare(&l, &r)? == Ordering::Equal)),
            Op::Neq => Ok(V::Bool(self.compare(&l, &r)? != Ordering::Equal)),
            Op::Lt => Ok(V::Bool(self.compare(&l, &r)? == Ordering::Less)),
            Op::Le => Ok(V::Bool(self.compare(&l, &r)? != Ordering::Greater)),
            Op::Gt => Ok(V::Bool(self.compare(&l, &r)? == Ordering::Greater)),
            Op::Ge => Ok(V::Bool(self.compare(&l, &r)? != Ordering::Less)),
            Op::And => Ok(V::Bool(self.bool(&l)? && self.bool(&r)?)),
            Op::Or => Ok(V::Bool(self.bool(&l)? || self.bool(&r)?)),
            Op::Compose => Ok(V::Op(Op::Compose, vec![l, r])),
            Op::Apply => {
                let f = self.force(&l)?;
                self.apply(f, r)
            }
        }
    }

    fn compare(&self, a: &Th<'a>, b: &Th<'a>) -> R<Ordering> {
        self.tick()?;
        match (self.force(a)?, self.force(b)?) {
            (V::Int(x), V::Int(y)) => Ok(x.cmp(&y)),
            (V::Bool(x), V::Bool(y)) => Ok(x.cmp(&y)),
            (V::Nil, V::Nil) => Ok(Ordering::Equal),
            (V::Nil, V::Cons(..)) => Ok(Ordering::Less),
            (V::Cons(..), V::Nil) => Ok(Ordering::Greater),
            (V::Cons(h1, t1), V::Cons(h2, t2)) => match self.compare(&h1, &h2)? {
                Ordering::Equal => self.compare(&t1, &t2),
                o => Ok(o),
            },
            (V::Tuple(xs), V::Tuple(ys)) => {
                for (x, y) in xs.iter().zip(&ys) {
                    match self.compare(x, y)? {
                        Ordering::Equal => {}
                        o => return Ok(o),
                    }
                }
                Ok(xs.len().cmp(&ys.len()))
            }
            _ => fail("compared values of different shapes"),
        }
    }

    fn deep(&self, v: V<'a>) -> R<Value> {
        match v {
            V::Int(n) => Ok(Value::Int(n)),
            V::Bool(b) => Ok(Value::Bool(b)),
            V::Tuple(ts) => ts.iter().map(|t| self.force(t).and_then(|v| self.deep(v))).collect::<R<_>>().map(Value::Tuple),
            V::Nil | V::Cons(..) => {
                let mut items = Vec::new();
                let mut cur = v;
                while let V::Cons(h, t) = cur {
                    self.tick()?;
                    let hv = self.force(&h)?;
                    items.push(self.deep(hv)?);
                    cur = self.force(&t)?;
                }
                match cur {
                    V::Nil => Ok(Value::List(items)),
                    _ => fail("improper list"),
                }
            }
            V::Lam(..) | V::Op(..) => fail("function result"),
        }
    }
}

fn range<'a>(lo: i64, hi: Option<i64>) -> V<'a> {
    if hi.is_some_and(|h| lo > h) {
        return V::Nil;
    }
    V::Cons(th(State::Done(V::Int(lo))), th(State::From(lo + 1, hi)))
}

fn inject<'a>(v: &Value) -> Th<'a> {
    let v = match v {
        Value::Int(n) => V::Int(*n),
        Value::Bool(b) => V::Bool(*b),
        Value::Tuple(vs) => V::Tuple(vs.iter().map(inject).collect()),
        Value::List(vs) => {
            let mut out = V::Nil;
            for v in vs.iter().rev() {
                out = V::Cons(inject(v), th(State::Done(out)));
            }
            out
        }
    };
    th(State::Done(v))
}
