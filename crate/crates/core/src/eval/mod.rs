//! Live evaluation: lazy, fuel-bounded evaluation that proceeds around holes.

mod model;
mod session;
mod value;

pub use model::{run_model, ModelRunner};
pub use value::{Indeterminate, PartialResult, Value};

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::prelude::prelude;
use crate::syntax::{enumerate_paths, node_at, Expr, HoleId, Path, Program};
use session::{Fail, Hook, Session};

pub const DEFAULT_FUEL: u64 = 100_000;

/// Expressions substituted for holes.
pub type Filling = BTreeMap<HoleId, Expr>;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum EvalError {
    #[error("evaluation ran out of fuel")]
    FuelExhausted,
    #[error("evaluation diverged")]
    Diverged,
    #[error("runtime error: {0}")]
    Primitive(String),
    #[error("unbound name {0}")]
    Unbound(String),
    #[error("result is not a first-order value")]
    NotAValue,
}

impl From<Fail> for EvalError {
    fn from(f: Fail) -> Self {
        match f {
            Fail::Fuel => EvalError::FuelExhausted,
            Fail::Loop => EvalError::Diverged,
            Fail::Error(m) => EvalError::Primitive(m.to_string()),
        }
    }
}

/// How calls to the entry function from inside the program are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// By the program itself.
    Direct,
    /// By the model solution whenever the argument is strictly smaller
    /// than the input being checked.
    Oracle,
}

/// One program, ready to be run on entry inputs.
#[derive(Clone, Copy)]
pub struct Runner<'r> {
    pub program: &'r Program,
    pub entry: &'r str,
    pub fillings: Option<&'r Filling>,
    pub mode: Mode,
    pub model: Option<&'r ModelRunner<'r>>,
    pub fuel: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryResult {
    pub result: Result<PartialResult, EvalError>,
    /// Inputs the model answered for, with its answers.
    pub recursive_calls: Vec<(Value, Value)>,
}

impl<'r> Runner<'r> {
    pub fn direct(program: &'r Program, entry: &'r str) -> Runner<'r> {
        Runner { program, entry, fillings: None, mode: Mode::Direct, model: None, fuel: DEFAULT_FUEL }
    }

    fn session(&self, root: &Value, guarded: bool) -> (Session<'r>, usize) {
        let mut s = Session::new(prelude(), self.fuel);
        if let Some(f) = self.fillings {
            s.set_fillings(f);
        }
        let scope = s.push_scope(Some(0), &self.program.bindings);
        if let (Mode::Oracle, Some(model)) = (self.mode, self.model) {
            let root = root.clone();
            if s.global(scope, self.entry).is_some() {
                s.install_hook(scope, self.entry, |prev| Hook::Oracle {
                    student: if guarded { None } else { prev },
                    model,
                    root,
                });
            }
        }
        (s, scope)
    }

    /// Evaluates the entry function on `input`.
    pub fn run(&self, input: &Value) -> EntryResult {
        let (mut s, scope) = self.session(input, false);
        let Some(f) = s.global(scope, self.entry) else {
            return EntryResult { result: Err(EvalError::Unbound(self.entry.to_string())), recursive_calls: vec![] };
        };
        let x = s.inject(input);
        let result = s.force(f).and_then(|fv| s.apply(fv, x)).map(|v| s.alloc_result(v));
        let result = match result {
            Ok(t) => Ok(s.snapshot(t)),
            Err(e) => Err(e.into()),
        };
        EntryResult { result, recursive_calls: std::mem::take(&mut s.recursive_calls) }
    }

    /// Evaluates `candidate` applied to `args` with `vars` in scope, as
    /// if at a hole reached while checking `root`. In oracle mode, calls
    /// to the entry function must be on arguments strictly inside `root`.
    pub fn run_local(&self, candidate: &'r Expr, vars: &'r [(String, Value)], args: &[Value], root: &Value) -> Result<PartialResult, EvalError> {
        let (mut s, scope) = self.session(root, true);
        let env = s.env_of(scope, vars);
        let mut v = s.eval(candidate, &env)?;
        for a in args {
            let t = s.inject(a);
            v = s.apply(v, t)?;
        }
        let t = s.alloc_result(v);
        Ok(s.snapshot(t))
    }

    /// Path of the program node to blame for the first place the entry's
    /// result on `input` departs from `expected`: the node that built the
    /// mismatching value, or else the nearest list cell around it built
    /// by the program. `None` when no program node is responsible.
    pub fn mismatch_path(&self, input: &Value, expected: &Value) -> Option<Path> {
        let mut paths: HashMap<*const Expr, Path> = HashMap::new();
        for p in enumerate_paths(self.program) {
            if let Some(e) = node_at(self.program, &p) {
                paths.insert(e as *const Expr, p);
            }
        }
        let is_student = |e: &Expr| paths.contains_key(&(e as *const Expr));
        let (mut s, scope) = self.session(input, false);
        let f = s.global(scope, self.entry)?;
        let x = s.inject(input);
        let t = match s.force(f).and_then(|fv| s.apply(fv, x)) {
            Ok(v) => s.alloc_result(v),
            Err(_) => return None,
        };
        let m = s.first_mismatch(t, expected, None, &is_student)?;
        let origin = m.own.filter(|e| is_student(e)).or(m.enclosing)?;
        paths.get(&(origin as *const Expr)).cloned()
    }
}

/// Evaluates an expression with the program's bindings in scope.
pub fn live_eval(program: &Program, e: &Expr, fuel: u64) -> Result<PartialResult, EvalError> {
    let mut s = Session::new(prelude(), fuel);
    let scope = s.push_scope(Some(0), &program.bindings);
    let env = session::Env::top(scope);
    let v = s.eval(e, &env)?;
    let t = s.alloc_result(v);
    Ok(s.snapshot(t))
}

/// What the entry function means while evaluating a property.
pub enum EntryBinding<'r> {
    Program(&'r Program),
    Observed { input: Value, output: Value },
}

/// Applies the property `name` (a binding of `properties`) to `input`.
pub fn eval_property(
    properties: &Program,
    name: &str,
    entry: &str,
    binding: EntryBinding<'_>,
    input: &Value,
    fuel: u64,
) -> Result<PartialResult, EvalError> {
    let mut s = Session::new(prelude(), fuel);
    let base = match binding {
        EntryBinding::Program(p) => s.push_scope(Some(0), &p.bindings),
        EntryBinding::Observed { input, output } => {
            let scope = s.push_scope(Some(0), &[]);
            s.install_hook(scope, entry, |_| Hook::Observed { input, output });
            scope
        }
    };
    let scope = s.push_scope(Some(base), &properties.bindings);
    let f = s.global(scope, name).ok_or_else(|| EvalError::Unbound(name.to_string()))?;
    let x = s.inject(input);
    let v = s.force(f).and_then(|fv| s.apply(fv, x))?;
    let t = s.alloc_result(v);
    Ok(s.snapshot(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    fn eval_src(program: &str, e: &str) -> PartialResult {
        let p = parse_program(program).unwrap();
        let e = parse_expr(e).unwrap();
        live_eval(&p, &e, DEFAULT_FUEL).unwrap()
    }

    fn run(program: &str, input: &[i64]) -> PartialResult {
        let p = parse_program(program).unwrap();
        Runner::direct(&p, "my_sort").run(&Value::ints(input)).result.unwrap()
    }

    #[test]
    fn foldr_cons_is_identity() {
        assert_eq!(run("my_sort = foldr (:) []", &[3, 2, 1]).to_string(), "[3,2,1]");
    }

    #[test]
    fn bad_base_case_on_empty_input() {
        assert_eq!(run("my_sort = foldr ? [0]", &[]).to_string(), "[0]");
    }

    #[test]
    fn cons_onto_hole() {
        let r = run("my_sort [] = []\nmy_sort (x:xs) = x : ?", &[2, 1]);
        assert_eq!(r.to_string(), "2:?");
        let PartialResult::Cons(_, tail) = r else { panic!() };
        let PartialResult::Indeterminate(i) = *tail else { panic!() };
        assert_eq!(i.env, Some(vec![("x".into(), Value::Int(2)), ("xs".into(), Value::ints(&[1]))]));
        assert!(i.is_ground());
    }

    #[test]
    fn laziness_on_open_ranges() {
        assert_eq!(eval_src("", "take 3 [0..]").to_string(), "[0,1,2]");
        assert_eq!(eval_src("", "zip [0..] [5,6]").to_string(), "[(0,5),(1,6)]");
    }

    #[test]
    fn hole_applied_to_an_open_range_has_no_ground_args() {
        let PartialResult::Indeterminate(i) = run("my_sort xs = ? [1..]", &[]) else { panic!() };
        assert_eq!(i.args, None);
    }

    #[test]
    fn map_over_hole_collects_applications() {
        let r = run("my_sort = map ?", &[2, 1]);
        assert_eq!(r.to_string(), "[? 2,? 1]");
    }

    #[test]
    fn primitive_errors() {
        let p = parse_program("").unwrap();
        let e = parse_expr("head []").unwrap();
        assert!(matches!(live_eval(&p, &e, 1000), Err(EvalError::Primitive(_))));
        let e = parse_expr("[1, head []]").unwrap();
        assert_eq!(live_eval(&p, &e, 1000).unwrap().to_string(), "[1,error \"no case alternative matches\"]");
    }

    #[test]
    fn fuel_and_loops() {
        let p = parse_program("loop x = loop x\nself = self").unwrap();
        assert_eq!(live_eval(&p, &parse_expr("loop 1").unwrap(), 10_000), Err(EvalError::FuelExhausted));
        assert_eq!(live_eval(&p, &parse_expr("self").unwrap(), 10_000), Err(EvalError::Diverged));
    }

    #[test]
    fn comparisons_are_structural() {
        assert_eq!(eval_src("", "[1,2] < [1,3]"), PartialResult::Bool(true));
        assert_eq!(eval_src("", "(1, [2]) == (1, [2])"), PartialResult::Bool(true));
        assert_eq!(eval_src("", "[1] == [1, head []]"), PartialResult::Bool(false));
        assert!(matches!(live_eval(&parse_program("").unwrap(), &parse_expr("id == id").unwrap(), 100), Err(EvalError::Primitive(_))));
    }

    #[test]
    fn library_functions() {
        assert_eq!(eval_src("", "permutes [1,2,2] [2,1,2]"), PartialResult::Bool(true));
        assert_eq!(eval_src("", "permutes [0] []"), PartialResult::Bool(false));
        assert_eq!(eval_src("", "nondescending [1,1,3]"), PartialResult::Bool(true));
        assert_eq!(eval_src("", "nondescending [3,2,1]"), PartialResult::Bool(false));
        assert_eq!(eval_src("", "(map (\\x -> x * 2) . filter (\\x -> x > 1)) [1,2,3]").to_string(), "[4,6]");
        assert_eq!(eval_src("", "reverse [1,2,3] ++ [0]").to_string(), "[3,2,1,0]");
    }

    #[test]
    fn oracle_answers_recursive_calls() {
        let model = parse_program("my_sort = foldr insert []").unwrap();
        let m = ModelRunner::new(&model, "my_sort", DEFAULT_FUEL);
        let p = parse_program("my_sort [] = []\nmy_sort (x:xs) = f x (my_sort xs)\n  where f y ys = ?").unwrap();
        let runner = Runner { mode: Mode::Oracle, model: Some(&m), ..Runner::direct(&p, "my_sort") };
        let out = runner.run(&Value::ints(&[3, 1, 2]));
        let PartialResult::Indeterminate(i) = out.result.unwrap() else { panic!() };
        let env = i.env.unwrap();
        assert_eq!(env.last().unwrap(), &("ys".to_string(), Value::ints(&[1, 2])));
        assert_eq!(out.recursive_calls, vec![(Value::ints(&[1, 2]), Value::ints(&[1, 2]))]);
    }

    #[test]
    fn blame_follows_value_origins() {
        let p = parse_program("my_sort = foldr (:) []").unwrap();
        let path = Runner::direct(&p, "my_sort").mismatch_path(&Value::ints(&[1, 0]), &Value::ints(&[0, 1]));
        assert_eq!(path, Some(Path(vec![0, 0, 1])));
        let p = parse_program("my_sort = foldr ? [0]").unwrap();
        let path = Runner::direct(&p, "my_sort").mismatch_path(&Value::ints(&[]), &Value::ints(&[]));
        assert_eq!(path, Some(Path(vec![0, 1])));
    }

    #[test]
    fn properties_see_observed_behaviour() {
        let props = parse_program("sort_nondescending xs = nondescending (my_sort xs)").unwrap();
        let obs = EntryBinding::Observed { input: Value::ints(&[3, 2, 1]), output: Value::ints(&[3, 2, 1]) };
        let r = eval_property(&props, "sort_nondescending", "my_sort", obs, &Value::ints(&[3, 2, 1]), 10_000);
        assert_eq!(r, Ok(PartialResult::Bool(false)));
    }
}
