//! Live bidirectional example checking: evaluate a partial program on an
//! example input, then run the result backwards against the expected
//! output to get local examples for each hole.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eval::{EvalError, Filling, Mode, ModelRunner, PartialResult, Runner, Value, DEFAULT_FUEL};
use crate::syntax::{HoleId, Program};

/// An input-output pair for the entry function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GlobalExample {
    pub input: Value,
    pub output: Value,
}

impl GlobalExample {
    pub fn new(input: Value, output: Value) -> GlobalExample {
        GlobalExample { input, output }
    }
}

/// What one hole must produce in one environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LocalExample {
    /// Visible variables at the hole, outermost first.
    pub env: Vec<(String, Value)>,
    /// Arguments the hole is applied to.
    pub args: Vec<Value>,
    pub output: Value,
    /// Entry input whose check produced this example.
    pub input: Value,
}

impl LocalExample {
    /// Source rendering: `?0 2 == 2`, with the environment appended when
    /// there is one.
    pub fn render(&self, head: &str) -> String {
        let mut s = head.to_string();
        for a in &self.args {
            s.push(' ');
            s.push_str(&a.atom());
        }
        s.push_str(" == ");
        s.push_str(&self.output.to_string());
        if !self.env.is_empty() {
            let binds: Vec<String> = self.env.iter().map(|(n, v)| format!("{n} = {v}")).collect();
            s.push_str(" given ");
            s.push_str(&binds.join(", "));
        }
        s
    }
}

/// Conjunction of requirements on the holes of a program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConstraintSet {
    pub locals: BTreeMap<HoleId, Vec<LocalExample>>,
    /// Global examples no local constraint captures (a hole's result was
    /// inspected, or its context was not a value). Any filling must still
    /// be checked against these by running the whole program.
    pub residuals: Vec<GlobalExample>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.locals.values().all(Vec::is_empty) && self.residuals.is_empty()
    }

    pub fn merge(&mut self, other: ConstraintSet) {
        for (h, xs) in other.locals {
            self.locals.entry(h).or_default().extend(xs);
        }
        for r in other.residuals {
            if !self.residuals.contains(&r) {
                self.residuals.push(r);
            }
        }
    }

    pub fn local_count(&self) -> usize {
        self.locals.values().map(Vec::len).sum()
    }
}

/// No hole filling can make the result match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

/// Runs a partial result backwards against the expected output of the
/// entry input `input`.
pub fn uneval(r: &PartialResult, expected: &Value, input: &Value) -> Result<ConstraintSet, Infeasible> {
    let mut cs = ConstraintSet::default();
    let mut residual = false;
    go(r, expected, input, &mut cs, &mut residual)?;
    if residual {
        cs.residuals.push(GlobalExample::new(input.clone(), expected.clone()));
    }
    Ok(cs)
}

fn go(r: &PartialResult, expected: &Value, input: &Value, cs: &mut ConstraintSet, residual: &mut bool) -> Result<(), Infeasible> {
    match (r, expected) {
        (PartialResult::Int(n), Value::Int(m)) if n == m => Ok(()),
        (PartialResult::Bool(a), Value::Bool(b)) if a == b => Ok(()),
        (PartialResult::Nil | PartialResult::Cons(..), Value::List(vs)) => go_list(r, vs, input, cs, residual),
        (PartialResult::Tuple(ps), Value::Tuple(vs)) if ps.len() == vs.len() => {
            ps.iter().zip(vs).try_for_each(|(p, v)| go(p, v, input, cs, residual))
        }
        (PartialResult::Indeterminate(i), v) => {
            match (&i.env, &i.args) {
                (Some(env), Some(args)) if !i.opaque => {
                    cs.locals.entry(i.hole).or_default().push(LocalExample {
                        env: env.clone(),
                        args: args.clone(),
                        output: v.clone(),
                        input: input.clone(),
                    });
                }
                _ => *residual = true,
            }
            Ok(())
        }
        (PartialResult::Unforced | PartialResult::Function, _) => {
            *residual = true;
            Ok(())
        }
        _ => Err(Infeasible),
    }
}

fn go_list(r: &PartialResult, items: &[Value], input: &Value, cs: &mut ConstraintSet, residual: &mut bool) -> Result<(), Infeasible> {
    let mut cur = r;
    let mut rest = items;
    while let PartialResult::Cons(h, t) = cur {
        let (first, more) = rest.split_first().ok_or(Infeasible)?;
        go(h, first, input, cs, residual)?;
        cur = t;
        rest = more;
    }
    match cur {
        PartialResult::Nil if rest.is_empty() => Ok(()),
        PartialResult::Nil => Err(Infeasible),
        other => go(other, &Value::List(rest.to_vec()), input, cs, residual),
    }
}

/// An input on which the program cannot produce the expected output,
/// whatever the holes are filled with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub input: Value,
    pub expected: Value,
    pub actual: PartialResult,
}

impl Counterexample {
    /// `my_sort [3,2,1] == [3,2,1]`
    pub fn render(&self, entry: &str) -> String {
        format!("{entry} {} == {}", self.input.atom(), self.actual)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Constraints(ConstraintSet),
    Counterexample(Counterexample),
    /// Evaluation did not finish on this input.
    Inconclusive { input: Value, reason: EvalError },
}

/// Checks one program (with optional fillings for some of its holes)
/// against examples.
#[derive(Clone, Copy)]
pub struct Checker<'c> {
    pub program: &'c Program,
    pub entry: &'c str,
    /// Answers recursive calls on smaller inputs, so that holes after a
    /// recursive call get ground local examples.
    pub model: Option<&'c ModelRunner<'c>>,
    pub fillings: Option<&'c Filling>,
    pub fuel: u64,
}

impl<'c> Checker<'c> {
    pub fn new(program: &'c Program, entry: &'c str) -> Checker<'c> {
        Checker { program, entry, model: None, fillings: None, fuel: DEFAULT_FUEL }
    }

    fn runner(&self, mode: Mode) -> Runner<'c> {
        Runner { program: self.program, entry: self.entry, fillings: self.fillings, mode, model: self.model, fuel: self.fuel }
    }

    /// Whether holes remain after applying the fillings.
    pub fn has_open_holes(&self) -> bool {
        let filled = |h: &HoleId| self.fillings.is_some_and(|f| f.contains_key(h));
        self.program.hole_ids().iter().any(|h| !filled(h))
            || self.fillings.is_some_and(|f| self.program.hole_ids().iter().any(|h| f.get(h).is_some_and(|e| e.is_hole() || !e.hole_ids().is_empty())))
    }

    pub fn check_example(&self, ex: &GlobalExample) -> CheckOutcome {
        let direct = self.runner(Mode::Direct).run(&ex.input);
        let r = match direct.result {
            Ok(r) => r,
            Err(EvalError::Primitive(msg)) => {
                return CheckOutcome::Counterexample(Counterexample {
                    input: ex.input.clone(),
                    expected: ex.output.clone(),
                    actual: PartialResult::Error(msg),
                })
            }
            Err(reason) => return CheckOutcome::Inconclusive { input: ex.input.clone(), reason },
        };
        let cs = match uneval(&r, &ex.output, &ex.input) {
            Ok(cs) => cs,
            Err(Infeasible) => {
                return CheckOutcome::Counterexample(Counterexample {
                    input: ex.input.clone(),
                    expected: ex.output.clone(),
                    actual: r,
                })
            }
        };
        if cs.residuals.is_empty() {
            return CheckOutcome::Constraints(cs);
        }
        if !self.has_open_holes() {
            return CheckOutcome::Inconclusive { input: ex.input.clone(), reason: EvalError::FuelExhausted };
        }
        if self.model.is_some() {
            if let Some(better) = self.with_oracle(ex) {
                return CheckOutcome::Constraints(better);
            }
        }
        CheckOutcome::Constraints(cs)
    }

    /// Constraints with recursive calls answered by the model. Each call
    /// answered becomes a residual example, which keeps the constraints
    /// sound for the program as written.
    fn with_oracle(&self, ex: &GlobalExample) -> Option<ConstraintSet> {
        let out = self.runner(Mode::Oracle).run(&ex.input);
        if out.recursive_calls.is_empty() {
            return None;
        }
        let mut cs = uneval(&out.result.ok()?, &ex.output, &ex.input).ok()?;
        for (input, output) in out.recursive_calls {
            let g = GlobalExample::new(input, output);
            if !cs.residuals.contains(&g) {
                cs.residuals.push(g);
            }
        }
        Some(cs)
    }

    /// Constraints from every example, or `None` as soon as one example
    /// gives anything else.
    pub fn constraints(&self, examples: &[GlobalExample]) -> Option<ConstraintSet> {
        let mut all = ConstraintSet::default();
        for ex in examples {
            match self.check_example(ex) {
                CheckOutcome::Constraints(cs) => all.merge(cs),
                _ => return None,
            }
        }
        Some(all)
    }

    /// Checks every example, smallest input first. Returns the first
    /// counterexample, else the first inconclusive input, else all
    /// constraints.
    pub fn check_all(&self, examples: &[GlobalExample]) -> CheckOutcome {
        let mut order: Vec<&GlobalExample> = examples.iter().collect();
        order.sort_by(|a, b| (a.input.size(), &a.input).cmp(&(b.input.size(), &b.input)));
        let mut all = ConstraintSet::default();
        let mut inconclusive = None;
        for ex in order {
            match self.check_example(ex) {
                CheckOutcome::Constraints(cs) => all.merge(cs),
                c @ CheckOutcome::Counterexample(_) => return c,
                i @ CheckOutcome::Inconclusive { .. } => {
                    inconclusive.get_or_insert(i);
                }
            }
        }
        inconclusive.unwrap_or(CheckOutcome::Constraints(all))
    }
}
