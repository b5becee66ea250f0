//! The oracle suites: each returns what it checked and every violation.

use std::collections::BTreeMap;
use std::rc::Rc;

use tutor_core::check::{CheckOutcome, Checker, ConstraintSet, GlobalExample};
use tutor_core::eval::{live_eval, run_model, EvalError, ModelRunner, PartialResult, Value};
use tutor_core::syntax::{node_count, parse_expr, parse_program, Expr, HoleId, Program};
use tutor_core::synth::{Budget, CostModel};
use tutor_core::tutor::{analyse, recover, Analysis, Evidence, Exercise, Settings};
use tutor_core::types::infer;

use super::brute::{fill, fillings, vocabulary, Enumerator};
use super::corpus::{probe_inputs, sample_inputs, EXPRESSIONS, GROUND, WITH_HOLES};
use super::reference::{Interp, RefError};

pub const ENTRY: &str = "my_sort";
const FUEL: u64 = 1_000_000;
/// Fuel for each run of a candidate filling.
const PROBE_FUEL: u64 = 20_000;
/// Largest number of whole-program fillings tried per program.
const MAX_FILLINGS: usize = 40_000;

#[derive(Debug, Default)]
pub struct Report {
    pub checked: usize,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    fn absorb(&mut self, other: Report) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }
}

/// Runs `f` on a thread with room for deep recursion.
pub fn with_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new().stack_size(256 << 20).spawn(f).unwrap().join().unwrap()
}

fn parallel(jobs: Vec<Box<dyn FnOnce() -> Report + Send>>) -> Report {
    let width = std::thread::available_parallelism().map_or(4, |n| n.get());
    let mut all = Report::default();
    let mut jobs = jobs.into_iter().peekable();
    while jobs.peek().is_some() {
        let handles: Vec<_> = jobs
            .by_ref()
            .take(width)
            .map(|job| std::thread::Builder::new().stack_size(256 << 20).spawn(job).unwrap())
            .collect();
        for h in handles {
            all.absorb(h.join().unwrap());
        }
    }
    all
}

#[derive(Debug, PartialEq)]
enum Outcome {
    Value(Value),
    Failed,
    Other(String),
}

fn engine_outcome(r: Result<PartialResult, EvalError>) -> Outcome {
    match r {
        Ok(PartialResult::Error(_)) | Err(EvalError::Primitive(_)) => Outcome::Failed,
        Ok(p) => match p.to_value() {
            Some(v) => Outcome::Value(v),
            None if contains_error(&p) && !p.has_unforced() && !p.has_holes() => Outcome::Failed,
            None => Outcome::Other(format!("partial {p}")),
        },
        Err(e) => Outcome::Other(e.to_string()),
    }
}

fn contains_error(p: &PartialResult) -> bool {
    match p {
        PartialResult::Error(_) => true,
        PartialResult::Cons(h, t) => contains_error(h) || contains_error(t),
        PartialResult::Tuple(ps) => ps.iter().any(contains_error),
        _ => false,
    }
}

fn reference_outcome(r: Result<Value, RefError>) -> Outcome {
    match r {
        Ok(v) => Outcome::Value(v),
        Err(RefError::Failed(_)) => Outcome::Failed,
        Err(e) => Outcome::Other(format!("{e:?}")),
    }
}

/// Live evaluation against the reference interpreter on hole-free programs.
pub fn evaluator_suite() -> Report {
    with_stack(|| {
        let mut r = Report::default();
        let empty = Program::default();
        for src in GROUND {
            let p = parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"));
            for input in sample_inputs() {
                let call = parse_expr(&format!("{ENTRY} {}", input.atom())).unwrap();
                let live = engine_outcome(live_eval(&p, &call, FUEL));
                let reference = reference_outcome(Interp::new(&p, FUEL).call(ENTRY, &input));
                r.checked += 1;
                if live != reference || matches!(live, Outcome::Other(_)) {
                    r.violations.push(format!("{src:?} on {input}: live {live:?}, reference {reference:?}"));
                }
            }
        }
        for src in EXPRESSIONS {
            let e = parse_expr(src).unwrap_or_else(|err| panic!("{src}: {err}"));
            let live = engine_outcome(live_eval(&empty, &e, FUEL));
            let reference = reference_outcome(Interp::new(&empty, FUEL).eval_applied(&e, &[], &[]));
            r.checked += 1;
            if live != reference || matches!(live, Outcome::Other(_)) {
                r.violations.push(format!("{src:?}: live {live:?}, reference {reference:?}"));
            }
        }
        r
    })
}

/// Candidates for every hole of `p`, at the largest depth up to 3 whose
/// combinations stay under the cap. Returns the depth used.
pub fn candidates(ex: &Exercise, p: &Program) -> (usize, Vec<(HoleId, Rc<Vec<Expr>>)>) {
    let typed = infer(p, &tutor_core::prelude::prelude().types, ENTRY, &ex.signature).expect("corpus program type-checks");
    let mut en = Enumerator::new(vocabulary(Some((ENTRY, ex.signature.clone()))));
    for depth in (1..=3).rev() {
        let per_hole: Vec<(HoleId, Rc<Vec<Expr>>)> = typed
            .hole_types
            .iter()
            .map(|(h, ty)| (*h, en.terms(ty, typed.hole_envs.get(h).map_or(&[][..], Vec::as_slice), depth)))
            .collect();
        let total = per_hole.iter().map(|(_, c)| c.len()).product::<usize>();
        if total <= MAX_FILLINGS || depth == 1 {
            return (depth, per_hole);
        }
    }
    unreachable!()
}

pub fn satisfies(q: &Program, g: &GlobalExample) -> bool {
    Interp::new(q, PROBE_FUEL).call(ENTRY, &g.input).is_ok_and(|v| v == g.output)
}

fn local_holds(filled_hole: &Expr, q: &Program, l: &tutor_core::check::LocalExample) -> bool {
    let vars: Vec<(&str, Value)> = l.env.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    Interp::new(q, PROBE_FUEL).eval_applied(filled_hole, &vars, &l.args).is_ok_and(|v| v == l.output)
}

/// Brute-force check of one program's counterexamples and local examples.
pub fn soundness_of(ex: &Exercise, src: &str) -> Report {
    let mut r = Report::default();
    let p = parse_program(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    let model = ModelRunner::new(&ex.models[0], ENTRY, FUEL);
    let checker = Checker { model: Some(&model), ..Checker::new(&p, ENTRY) };
    let (depth, per_hole) = candidates(ex, &p);
    let all = fillings(&per_hole);
    let mut satisfied = 0;
    for input in probe_inputs() {
        let expected = run_model(&ex.models[0], ENTRY, &input, FUEL).unwrap();
        let g = GlobalExample::new(input.clone(), expected);
        r.checked += 1;
        match checker.check_example(&g) {
            CheckOutcome::Counterexample(c) => {
                if let Some(f) = all.iter().find(|f| satisfies(&fill(&p, f), &g)) {
                    r.violations.push(format!("{src:?}: counterexample {} refuted by {f:?}", c.render(ENTRY)));
                }
            }
            CheckOutcome::Constraints(cs) => {
                for f in &all {
                    let q = fill(&p, f);
                    if !satisfies(&q, &g) || !cs.residuals.iter().all(|res| satisfies(&q, res)) {
                        continue;
                    }
                    satisfied += 1;
                    if let Some(bad) = broken_local(f, &q, &cs) {
                        r.violations.push(format!("{src:?} on {input}: {f:?} satisfies the example but not {bad}"));
                        break;
                    }
                }
            }
            CheckOutcome::Inconclusive { .. } => r.notes.push(format!("{src:?} inconclusive on {input}")),
        }
    }
    r.notes.push(format!("{src:?}: depth {depth}, {} fillings, {satisfied} satisfying", all.len()));
    r
}

pub fn broken_local(f: &BTreeMap<HoleId, Expr>, q: &Program, cs: &ConstraintSet) -> Option<String> {
    for (h, ls) in &cs.locals {
        let Some(e) = f.get(h) else { continue };
        for l in ls {
            if !local_holds(e, q, l) {
                return Some(l.render(&format!("?{h}")));
            }
        }
    }
    None
}

/// Counterexample and unevaluation soundness over the whole corpus.
pub fn soundness_suite() -> Report {
    let jobs: Vec<Box<dyn FnOnce() -> Report + Send>> = WITH_HOLES
        .iter()
        .map(|src| Box::new(move || soundness_of(&Exercise::bundled(), src)) as Box<dyn FnOnce() -> Report + Send>)
        .collect();
    parallel(jobs)
}

/// Recovery stays within the node count of each corpus program.
pub fn recovery_suite(budget_ms: u64) -> Report {
    let wrong_ground = GROUND.iter().filter(|s| !s.contains("insert") && !s.contains("filter (\\y"));
    let jobs: Vec<Box<dyn FnOnce() -> Report + Send>> = WITH_HOLES
        .iter()
        .chain(wrong_ground)
        .map(|src| {
            Box::new(move || {
                let ex = Exercise::bundled();
                let mut r = Report::default();
                let p = parse_program(src).unwrap();
                let cm: CostModel = ex.cost_model.clone();
                let s = Settings { budget: Budget { time_ms: budget_ms, ..Budget::default() }, fuel: 100_000, cost_model: &cm };
                let evidence = match analyse(&ex, &p, s).0 {
                    Analysis::Counterexample(c) => Evidence::Counterexample(c),
                    Analysis::Conflict { conflict, .. } => Evidence::FailedHole(conflict.hole),
                    Analysis::Exhausted { hole } | Analysis::Timeout { hole } | Analysis::Unverified { hole } => {
                        Evidence::FailedHole(hole.unwrap_or(0))
                    }
                    _ => return r,
                };
                let rec = recover(&ex, &p, evidence, s);
                r.checked += 1;
                let bound = node_count(&p);
                if rec.iterations > bound {
                    r.violations.push(format!("{src:?}: {} iterations, {bound} nodes", rec.iterations));
                }
                r.notes.push(format!(
                    "{src:?}: {} iterations of {bound}, repair {:?}",
                    rec.iterations,
                    rec.repair.map(|x| x.source)
                ));
                r
            }) as Box<dyn FnOnce() -> Report + Send>
        })
        .collect();
    parallel(jobs)
}
