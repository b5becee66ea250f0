//! Hole filling: conflict detection over local examples and cost-guided
//! enumerative search.

mod cost;
mod search;

pub use cost::{learn_cost_model, CostModel, CostWeights, Production};
pub use search::{synthesize, Budget, SynthesisOutcome, SynthesisReport, SynthesisTask};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::check::{CheckOutcome, Checker, ConstraintSet, Counterexample, GlobalExample, LocalExample};
use crate::eval::{eval_property, EntryBinding, EvalError, Filling, PartialResult, Value};
use crate::syntax::{Expr, HoleId, Program};

/// Two local examples for one hole that agree on everything the hole can
/// see but demand different outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictPair {
    pub left: LocalExample,
    pub right: LocalExample,
    /// Entry inputs on which the same clash arises.
    pub inputs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub hole: HoleId,
    pub pairs: Vec<ConflictPair>,
}

/// Finds the first hole with functionally inconsistent local examples.
/// Examples are compared only when they come from the same entry input.
pub fn detect_conflict(k: &ConstraintSet) -> Option<Conflict> {
    for (&hole, examples) in &k.locals {
        let mut seen: BTreeMap<(&Value, &[(String, Value)], &[Value]), &LocalExample> = BTreeMap::new();
        let mut pairs: Vec<ConflictPair> = Vec::new();
        for ex in examples {
            let key = (&ex.input, ex.env.as_slice(), ex.args.as_slice());
            let Some(first) = seen.get(&key) else {
                seen.insert(key, ex);
                continue;
            };
            if first.output == ex.output {
                continue;
            }
            let same = |p: &ConflictPair| {
                p.left.env == ex.env
                    && p.left.args == ex.args
                    && ((p.left.output == first.output && p.right.output == ex.output)
                        || (p.left.output == ex.output && p.right.output == first.output))
            };
            match pairs.iter_mut().find(|p| same(p)) {
                Some(p) => {
                    if !p.inputs.contains(&ex.input) {
                        p.inputs.push(ex.input.clone());
                    }
                }
                None => pairs.push(ConflictPair {
                    left: (*first).clone(),
                    right: ex.clone(),
                    inputs: vec![ex.input.clone()],
                }),
            }
        }
        if !pairs.is_empty() {
            return Some(Conflict { hole, pairs });
        }
    }
    None
}

/// Substitutes fillings for holes.
pub fn apply_filling(p: &Program, filling: &Filling) -> Program {
    let mut out = p.clone();
    for b in &mut out.bindings {
        b.body.walk_mut(&mut |e| {
            if let Expr::Hole(id) = e {
                if let Some(f) = filling.get(id) {
                    *e = f.clone();
                }
            }
        });
    }
    out
}

/// Named properties to test, each a one-argument function over entry inputs.
#[derive(Clone, Copy)]
pub struct PropertySuite<'p> {
    pub program: &'p Program,
    pub names: &'p [String],
    pub inputs: &'p [Value],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Counterexample(Counterexample),
    Property { name: String, input: Value, result: PartialResult },
    Inconclusive { input: Value, reason: EvalError },
    /// Holes remain after filling.
    Incomplete,
}

/// Runs the filled program on every example and every property.
pub fn verify_filling(
    p: &Program,
    entry: &str,
    filling: &Filling,
    examples: &[GlobalExample],
    properties: Option<PropertySuite<'_>>,
    fuel: u64,
) -> Result<(), Witness> {
    let filled = apply_filling(p, filling);
    if filled.has_holes() {
        return Err(Witness::Incomplete);
    }
    let checker = Checker { fuel, ..Checker::new(&filled, entry) };
    match checker.check_all(examples) {
        CheckOutcome::Counterexample(c) => return Err(Witness::Counterexample(c)),
        CheckOutcome::Inconclusive { input, reason } => return Err(Witness::Inconclusive { input, reason }),
        CheckOutcome::Constraints(cs) if !cs.is_empty() => {
            let input = cs.residuals.first().map(|g| g.input.clone()).unwrap_or(Value::List(vec![]));
            return Err(Witness::Inconclusive { input, reason: EvalError::FuelExhausted });
        }
        CheckOutcome::Constraints(_) => {}
    }
    if let Some(props) = properties {
        for name in props.names {
            for input in props.inputs {
                let r = eval_property(props.program, name, entry, EntryBinding::Program(&filled), input, fuel);
                match r {
                    Ok(PartialResult::Bool(true)) => {}
                    Ok(result) => return Err(Witness::Property { name: name.clone(), input: input.clone(), result }),
                    Err(e) => {
                        let result = PartialResult::Error(e.to_string());
                        return Err(Witness::Property { name: name.clone(), input: input.clone(), result });
                    }
                }
            }
        }
    }
    Ok(())
}
