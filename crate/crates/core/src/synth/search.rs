use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::cost::{CostModel, Production};
use super::{detect_conflict, Conflict};
use crate::check::{uneval, Checker, ConstraintSet, GlobalExample, LocalExample};
use crate::eval::{EvalError, Filling, Mode, ModelRunner, Runner, Value};
use crate::syntax::{is_hidden, Expr, HoleId, Op};
use crate::types::{op_scheme, unify, Scheme, TyVar, Type, TypeEnv, TypedProgram};

/// Ids at and above this are search goals, never program holes.
const GOAL_BASE: HoleId = 1 << 24;
/// Local examples tried on each partial candidate.
const EXAMPLE_CAP: usize = 24;
const FRESH_BASE: TyVar = 1 << 20;
/// Operators offered as productions.
const OPERATORS: [Op; 10] = [Op::Cons, Op::Append, Op::Add, Op::Sub, Op::Mul, Op::Eq, Op::Lt, Op::Le, Op::And, Op::Or];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub time_ms: u64,
    pub max_dequeues: usize,
    /// Largest term, in nodes, considered for one hole.
    pub max_size: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { time_ms: 5_000, max_dequeues: 50_000, max_size: 12 }
    }
}

pub struct SynthesisTask<'t> {
    pub typed: &'t TypedProgram,
    /// Library functions the filling may use.
    pub library: &'t TypeEnv,
    /// Answers recursive calls to the entry function.
    pub model: Option<&'t ModelRunner<'t>>,
    pub examples: &'t [GlobalExample],
    /// Constraints from checking the unfilled program against `examples`.
    pub constraints: &'t ConstraintSet,
    pub budget: Budget,
    pub fuel: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisOutcome {
    Success { filling: Filling, cost: u32 },
    Conflict(Conflict),
    /// The search space within the budget held no filling. `hole` is the
    /// furthest hole the search reached.
    Exhausted { hole: Option<HoleId> },
    Timeout { hole: Option<HoleId> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub outcome: SynthesisOutcome,
    /// Candidates taken off the queue.
    pub dequeued: usize,
    pub elapsed: Duration,
}

type Ctx = Rc<Vec<(String, Type)>>;

struct Goal {
    id: HoleId,
    ty: Type,
    ctx: Ctx,
}

/// One way to refine a goal. Holes `0..goals.len()` in `expr` are the new
/// subgoals, left to right.
struct Template {
    expr: Expr,
    goals: Vec<(Type, Ctx)>,
    cost: u32,
    size: usize,
}

struct State {
    /// Index of the program hole being filled.
    hole: usize,
    term: Expr,
    goals: Vec<Goal>,
    filling: Rc<Filling>,
    examples: Rc<Vec<LocalExample>>,
    cost: u32,
    size: usize,
    next_goal: HoleId,
}

/// A queued child: template `idx` applied to `parent`'s first goal.
struct Entry {
    f: u32,
    size: usize,
    seq: u64,
    parent: Rc<State>,
    templates: Rc<Vec<Template>>,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.f, other.size, other.seq).cmp(&(self.f, self.size, self.seq))
    }
}

enum Stop {
    Found(Filling, u32),
    Exhausted,
    Timeout,
}

/// Best-first search for a joint filling of every hole, left to right.
/// Queue priority is cost so far plus the minimum production cost for
/// every open goal and unfilled hole.
pub fn synthesize(task: &SynthesisTask<'_>, cm: &CostModel) -> SynthesisReport {
    let start = Instant::now();
    if let Some(c) = detect_conflict(task.constraints) {
        return SynthesisReport { outcome: SynthesisOutcome::Conflict(c), dequeued: 0, elapsed: start.elapsed() };
    }
    let mut s = Search::new(task, cm, start);
    let stop = s.run();
    let hole = s.holes.get(s.furthest).copied();
    let outcome = match stop {
        Stop::Found(filling, cost) => SynthesisOutcome::Success { filling, cost },
        Stop::Exhausted => SynthesisOutcome::Exhausted { hole },
        Stop::Timeout => SynthesisOutcome::Timeout { hole },
    };
    SynthesisReport { outcome, dequeued: s.dequeued, elapsed: start.elapsed() }
}

/// First hole asked for two different outputs in the same environment and
/// with the same arguments, on any inputs. No term can fill such a hole.
fn unsatisfiable(cs: &ConstraintSet) -> Option<HoleId> {
    cs.locals.iter().find_map(|(&hole, examples)| {
        let mut seen: HashMap<(&[(String, Value)], &[Value]), &Value> = HashMap::new();
        examples
            .iter()
            .any(|ex| *seen.entry((ex.env.as_slice(), ex.args.as_slice())).or_insert(&ex.output) != &ex.output)
            .then_some(hole)
    })
}

struct Search<'s, 't> {
    task: &'s SynthesisTask<'t>,
    cm: &'s CostModel,
    holes: Vec<HoleId>,
    names: Vec<(String, Scheme)>,
    universe: Vec<Type>,
    min_cost: u32,
    cache: HashMap<(Type, Vec<(String, Type)>), Rc<Vec<Template>>>,
    heap: BinaryHeap<Entry>,
    seq: u64,
    dequeued: usize,
    furthest: usize,
    start: Instant,
}

impl<'s, 't> Search<'s, 't> {
    fn new(task: &'s SynthesisTask<'t>, cm: &'s CostModel, start: Instant) -> Self {
        let typed = task.typed;
        let mut names: Vec<(String, Scheme)> = task
            .library
            .names()
            .filter(|n| !typed.binding_types.contains_key(*n))
            .filter_map(|n| task.library.get(n).map(|s| (n.to_string(), s.clone())))
            .collect();
        names.extend(typed.binding_types.iter().map(|(n, s)| (n.clone(), s.clone())));
        names.retain(|(n, _)| !is_hidden(n));
        names.sort_by(|a, b| a.0.cmp(&b.0));

        let mut universe: Vec<Type> = vec![Type::Int, Type::Bool, Type::list(Type::Int)];
        let mut add = |t: &Type| {
            for s in t.default_to_int().subterms() {
                if !s.is_function() && !universe.contains(s) {
                    universe.push(s.clone());
                }
            }
        };
        add(&typed.signature);
        typed.hole_types.values().for_each(&mut add);
        typed.hole_envs.values().flatten().for_each(|(_, t)| add(t));

        Search {
            task,
            cm,
            holes: typed.program.hole_ids(),
            names,
            universe,
            min_cost: cm.min_cost(),
            cache: HashMap::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            dequeued: 0,
            furthest: 0,
            start,
        }
    }

    fn run(&mut self) -> Stop {
        if self.holes.is_empty() {
            let filling = Filling::new();
            return match self.commit_check(&filling) {
                Some(cs) if cs.is_empty() => Stop::Found(filling, 0),
                _ => Stop::Exhausted,
            };
        }
        if let Some(h) = unsatisfiable(self.task.constraints) {
            self.furthest = self.holes.iter().position(|x| *x == h).unwrap_or(0);
            return Stop::Exhausted;
        }
        let examples = self.ground_examples(self.task.constraints, self.holes[0]);
        let root = self.root(0, Rc::new(Filling::new()), examples, 0);
        self.push_first(root);
        let limit = Duration::from_millis(self.task.budget.time_ms);
        while let Some(entry) = self.heap.pop() {
            if self.start.elapsed() > limit {
                return Stop::Timeout;
            }
            if self.dequeued >= self.task.budget.max_dequeues {
                return Stop::Exhausted;
            }
            self.dequeued += 1;
            if entry.idx + 1 < entry.templates.len() {
                let (f, size) = self.priority(&entry.parent, &entry.templates[entry.idx + 1]);
                let seq = self.next_seq();
                self.heap.push(Entry { f, size, seq, idx: entry.idx + 1, parent: entry.parent.clone(), templates: entry.templates.clone() });
            }
            let child = self.expand(&entry.parent, &entry.templates[entry.idx]);
            if child.size > self.task.budget.max_size {
                continue;
            }
            self.furthest = self.furthest.max(child.hole);
            if !self.feasible(&child) {
                continue;
            }
            if child.goals.is_empty() {
                if let Some(stop) = self.commit(child) {
                    return stop;
                }
            } else {
                self.push_first(Rc::new(child));
            }
        }
        Stop::Exhausted
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn root(&self, hole: usize, filling: Rc<Filling>, examples: Vec<LocalExample>, cost: u32) -> Rc<State> {
        let id = self.holes[hole];
        let typed = self.task.typed;
        let ty = typed.hole_types.get(&id).cloned().unwrap_or(Type::Int).default_to_int();
        let ctx: Vec<(String, Type)> =
            typed.hole_envs.get(&id).map(|e| e.iter().map(|(n, t)| (n.clone(), t.default_to_int())).collect()).unwrap_or_default();
        Rc::new(State {
            hole,
            term: Expr::Hole(GOAL_BASE),
            goals: vec![Goal { id: GOAL_BASE, ty, ctx: Rc::new(ctx) }],
            filling,
            examples: Rc::new(examples),
            cost,
            size: 1,
            next_goal: GOAL_BASE + 1,
        })
    }

    fn ground_examples(&self, cs: &ConstraintSet, hole: HoleId) -> Vec<LocalExample> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for ex in cs.locals.get(&hole).into_iter().flatten() {
            if seen.insert((&ex.env, &ex.args, &ex.output)) {
                out.push(ex.clone());
                if out.len() == EXAMPLE_CAP {
                    break;
                }
            }
        }
        out
    }

    fn priority(&self, parent: &State, t: &Template) -> (u32, usize) {
        let open = parent.goals.len() - 1 + t.goals.len() + (self.holes.len() - parent.hole - 1);
        (parent.cost + t.cost + open as u32 * self.min_cost, parent.size - 1 + t.size)
    }

    fn push_first(&mut self, parent: Rc<State>) {
        let goal = &parent.goals[0];
        let templates = self.templates(&goal.ty, &goal.ctx);
        if templates.is_empty() {
            return;
        }
        let (f, size) = self.priority(&parent, &templates[0]);
        let seq = self.next_seq();
        self.heap.push(Entry { f, size, seq, parent, templates, idx: 0 });
    }

    fn expand(&self, parent: &State, t: &Template) -> State {
        let target = parent.goals[0].id;
        let base = parent.next_goal;
        let mut piece = t.expr.clone();
        piece.walk_mut(&mut |e| {
            if let Expr::Hole(i) = e {
                *i += base;
            }
        });
        let mut term = parent.term.clone();
        let mut piece = Some(piece);
        term.walk_mut(&mut |e| {
            if matches!(e, Expr::Hole(id) if *id == target) {
                if let Some(p) = piece.take() {
                    *e = p;
                }
            }
        });
        let mut goals: Vec<Goal> =
            t.goals.iter().enumerate().map(|(i, (ty, ctx))| Goal { id: base + i as HoleId, ty: ty.clone(), ctx: ctx.clone() }).collect();
        goals.extend(parent.goals[1..].iter().map(|g| Goal { id: g.id, ty: g.ty.clone(), ctx: g.ctx.clone() }));
        State {
            hole: parent.hole,
            term,
            goals,
            filling: parent.filling.clone(),
            examples: parent.examples.clone(),
            cost: parent.cost + t.cost,
            size: parent.size - 1 + t.size,
            next_goal: base + t.goals.len() as HoleId,
        }
    }

    fn runner<'a>(&'a self, filling: &'a Filling) -> Runner<'a> {
        let task = self.task;
        Runner {
            program: &task.typed.program,
            entry: &task.typed.entry,
            fillings: Some(filling),
            mode: if task.model.is_some() { Mode::Oracle } else { Mode::Direct },
            model: task.model,
            fuel: task.fuel,
        }
    }

    /// Whether the candidate can still meet every local example.
    fn feasible(&self, st: &State) -> bool {
        let mut body = &st.term;
        while let Expr::Lam(_, b) = body {
            body = b;
        }
        if body.is_hole() {
            return true;
        }
        let complete = st.goals.is_empty();
        let runner = self.runner(&st.filling);
        st.examples.iter().all(|ex| match runner.run_local(&st.term, &ex.env, &ex.args, &ex.input) {
            Ok(r) => uneval(&r, &ex.output, &ex.input).is_ok(),
            Err(EvalError::FuelExhausted | EvalError::Diverged) => !complete,
            Err(_) => false,
        })
    }

    fn commit_check(&self, filling: &Filling) -> Option<ConstraintSet> {
        let checker = Checker {
            program: &self.task.typed.program,
            entry: &self.task.typed.entry,
            model: self.task.model,
            fillings: Some(filling),
            fuel: self.task.fuel,
        };
        checker.constraints(self.task.examples)
    }

    /// Fixes the finished term for the current hole and re-checks the
    /// program; moves on to the next hole with fresh local examples.
    fn commit(&mut self, st: State) -> Option<Stop> {
        let mut filling = (*st.filling).clone();
        filling.insert(self.holes[st.hole], st.term);
        let cs = self.commit_check(&filling)?;
        let next = st.hole + 1;
        if next == self.holes.len() {
            return cs.is_empty().then_some(Stop::Found(filling, st.cost));
        }
        if unsatisfiable(&cs).is_some() {
            return None;
        }
        let examples = self.ground_examples(&cs, self.holes[next]);
        let root = self.root(next, Rc::new(filling), examples, st.cost);
        self.furthest = self.furthest.max(next);
        self.push_first(root);
        None
    }

    fn templates(&mut self, ty: &Type, ctx: &Ctx) -> Rc<Vec<Template>> {
        let key = (ty.clone(), ctx.as_ref().clone());
        if let Some(t) = self.cache.get(&key) {
            return t.clone();
        }
        let out = Rc::new(self.build_templates(ty, ctx));
        self.cache.insert(key, out.clone());
        out
    }

    fn build_templates(&self, ty: &Type, ctx: &Ctx) -> Vec<Template> {
        let cm = self.cm;
        let app = cm.cost(&Production::App);
        let mut out = Vec::new();

        let mut shadowed = HashSet::new();
        for (name, t) in ctx.iter().rev() {
            if shadowed.insert(name.as_str()) {
                self.applied(Expr::var(name.as_str()), cm.cost(&Production::Var), &Scheme::mono(t.clone()), ty, ctx, &mut out);
            }
        }
        for (name, scheme) in &self.names {
            if shadowed.contains(name.as_str()) {
                continue;
            }
            let cost = cm.cost(&Production::Name(name.clone()));
            self.applied(Expr::var(name.as_str()), cost, scheme, ty, ctx, &mut out);
        }
        for op in OPERATORS {
            let cost = cm.cost(&Production::Name(op.symbol().to_string()));
            let mut fresh = FRESH_BASE;
            let t = op_scheme(op).instantiate(&mut || {
                fresh += 1;
                fresh
            });
            let (params, result) = t.uncurry();
            let params: Vec<Type> = params.into_iter().cloned().collect();
            for k in 0..=params.len() {
                let rest = Type::arrows(params[k..].iter().cloned(), result.clone());
                for args in self.instances(&params[..k], &rest, ty) {
                    let (expr, extra) = match k {
                        0 => (Expr::OpRef(op), 0),
                        1 => (Expr::app(Expr::OpRef(op), Expr::Hole(0)), app),
                        _ => (Expr::binop(op, Expr::Hole(0), Expr::Hole(1)), 0),
                    };
                    let size = expr.size();
                    out.push(Template { expr, goals: with_ctx(args, ctx), cost: cost + extra, size });
                }
            }
        }
        match ty {
            Type::Int => {
                for n in [0, 1] {
                    out.push(Template { expr: Expr::Int(n), goals: vec![], cost: cm.cost(&Production::Int), size: 1 });
                }
            }
            Type::Bool => {
                for b in [true, false] {
                    out.push(Template { expr: Expr::Bool(b), goals: vec![], cost: cm.cost(&Production::Bool), size: 1 });
                }
            }
            Type::List(elem) => {
                for n in 0..=2u32 {
                    let expr = Expr::List((0..n).map(Expr::Hole).collect());
                    let goals = (0..n).map(|_| ((**elem).clone(), ctx.clone())).collect();
                    out.push(Template { size: expr.size(), expr, goals, cost: cm.cost(&Production::List) });
                }
            }
            Type::Tuple(ts) => {
                let expr = Expr::Tuple((0..ts.len() as HoleId).map(Expr::Hole).collect());
                let goals = ts.iter().map(|t| (t.clone(), ctx.clone())).collect();
                out.push(Template { size: expr.size(), expr, goals, cost: cm.cost(&Production::Tuple) });
            }
            Type::Fun(a, b) => {
                let taken = |n: &str| ctx.iter().any(|(c, _)| c == n) || self.names.iter().any(|(c, _)| c == n);
                let var = (0..).map(|i| format!("v{i}")).find(|n| !taken(n)).unwrap_or_default();
                let mut inner = ctx.as_ref().clone();
                inner.push((var.clone(), (**a).clone()));
                let expr = Expr::lam(var, Expr::Hole(0));
                out.push(Template { expr, goals: vec![((**b).clone(), Rc::new(inner))], cost: cm.cost(&Production::Lambda), size: 2 });
            }
            Type::Var(_) => {}
        }
        let min = self.min_cost;
        out.sort_by_key(|t| (t.cost + t.goals.len() as u32 * min, t.size));
        out
    }

    /// Adds `head` applied to 0, 1, ... arguments wherever the result
    /// type fits the goal.
    fn applied(&self, head: Expr, cost: u32, scheme: &Scheme, goal: &Type, ctx: &Ctx, out: &mut Vec<Template>) {
        let app = self.cm.cost(&Production::App);
        let mut fresh = FRESH_BASE;
        let t = scheme.instantiate(&mut || {
            fresh += 1;
            fresh
        });
        let (params, result) = t.uncurry();
        let params: Vec<Type> = params.into_iter().cloned().collect();
        for k in 0..=params.len() {
            let rest = Type::arrows(params[k..].iter().cloned(), result.clone());
            for args in self.instances(&params[..k], &rest, goal) {
                let expr = Expr::apps(head.clone(), (0..k as HoleId).map(Expr::Hole));
                out.push(Template { size: 1 + 2 * k, expr, goals: with_ctx(args, ctx), cost: cost + k as u32 * app });
            }
        }
    }

    /// Ground argument types making `rest` equal to `goal`; type variables
    /// the goal leaves open range over the type universe.
    fn instances(&self, args: &[Type], rest: &Type, goal: &Type) -> Vec<Vec<Type>> {
        let Ok(s) = unify(rest, goal) else { return vec![] };
        let args: Vec<Type> = args.iter().map(|a| a.apply(&s)).collect();
        let free: Vec<TyVar> = args.iter().flat_map(|a| a.free_vars()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        if free.len() > 2 {
            return vec![];
        }
        let mut out = vec![args];
        for v in free {
            let mut next = Vec::new();
            for partial in &out {
                for u in &self.universe {
                    next.push(partial.iter().map(|a| a.map_vars(&|w| if w == v { u.clone() } else { Type::Var(w) })).collect());
                }
            }
            out = next;
        }
        out
    }
}

fn with_ctx(args: Vec<Type>, ctx: &Ctx) -> Vec<(Type, Ctx)> {
    args.into_iter().map(|t| (t, ctx.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{CheckOutcome, Checker};
    use crate::eval::{Value, DEFAULT_FUEL};
    use crate::prelude::prelude;
    use crate::syntax::{parse_program, parse_type, pretty_expr};
    use crate::types::infer;

    fn examples() -> Vec<GlobalExample> {
        let mut out = Vec::new();
        for n in 0..=3usize {
            let mut xs = vec![0i64; n];
            loop {
                let mut ys = xs.clone();
                ys.sort();
                out.push(GlobalExample::new(Value::ints(&xs), Value::ints(&ys)));
                let Some(i) = (0..n).rev().find(|&i| xs[i] < 3) else { break };
                xs[i] += 1;
                xs[i + 1..].iter_mut().for_each(|x| *x = 0);
            }
        }
        out
    }

    fn solve(src: &str, cm: &CostModel) -> (SynthesisReport, TypedProgram) {
        let p = parse_program(src).unwrap();
        let lib = prelude().types.clone();
        let typed = infer(&p, &lib, "my_sort", &parse_type("[Int] -> [Int]").unwrap()).unwrap();
        let exs = examples();
        let model = parse_program("my_sort = foldr insert []").unwrap();
        let m = ModelRunner::new(&model, "my_sort", DEFAULT_FUEL);
        let CheckOutcome::Constraints(cs) = Checker { model: Some(&m), ..Checker::new(&p, "my_sort") }.check_all(&exs) else {
            panic!("unexpected check outcome")
        };
        let task = SynthesisTask {
            typed: &typed,
            library: &lib,
            model: Some(&m),
            examples: &exs,
            constraints: &cs,
            budget: Budget::default(),
            fuel: DEFAULT_FUEL,
        };
        (synthesize(&task, cm), typed)
    }

    fn shown(filling: &Filling) -> Vec<String> {
        filling.values().map(pretty_expr).collect()
    }

    #[test]
    fn fills_fold_holes() {
        let (r, _) = solve("my_sort [] = []\nmy_sort (x:xs) = foldr ? ? xs", &CostModel::uniform());
        let SynthesisOutcome::Success { filling, .. } = r.outcome else { panic!("{:?}", r.outcome) };
        assert_eq!(shown(&filling), ["insert", "[x]"]);
    }

    #[test]
    fn fills_where_helper() {
        let (r, _) = solve("my_sort [] = []\nmy_sort (x:xs) = f x (my_sort xs)\n  where f y ys = ?", &CostModel::uniform());
        let SynthesisOutcome::Success { filling, .. } = r.outcome else { panic!("{:?}", r.outcome) };
        assert_eq!(shown(&filling), ["insert y ys"]);
    }

    #[test]
    fn identity_hole_is_a_variable() {
        let p = parse_program("my_sort xs = ?").unwrap();
        let lib = prelude().types.clone();
        let typed = infer(&p, &lib, "my_sort", &parse_type("[Int] -> [Int]").unwrap()).unwrap();
        let exs: Vec<GlobalExample> = [vec![], vec![1], vec![2, 1]].iter().map(|xs| GlobalExample::new(Value::ints(xs), Value::ints(xs))).collect();
        let CheckOutcome::Constraints(cs) = Checker::new(&p, "my_sort").check_all(&exs) else { panic!() };
        let task = SynthesisTask { typed: &typed, library: &lib, model: None, examples: &exs, constraints: &cs, budget: Budget::default(), fuel: DEFAULT_FUEL };
        let r = synthesize(&task, &CostModel::uniform());
        let SynthesisOutcome::Success { filling, .. } = r.outcome else { panic!("{:?}", r.outcome) };
        assert_eq!(shown(&filling), ["xs"]);
    }

    #[test]
    fn conflicts_skip_search() {
        let (r, _) = solve("my_sort = map ?", &CostModel::uniform());
        assert!(matches!(r.outcome, SynthesisOutcome::Conflict(_)));
        assert_eq!(r.dequeued, 0);
    }

    #[test]
    fn clashes_across_inputs_exhaust_at_once() {
        let (r, _) = solve("my_sort = map ? . zip [0..]", &CostModel::uniform());
        assert_eq!(r.outcome, SynthesisOutcome::Exhausted { hole: Some(0) });
        assert_eq!(r.dequeued, 0);
    }
}
