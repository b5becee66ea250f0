use std::time::Duration;

use serde::Serialize;

use super::exercise::Exercise;
use crate::check::{CheckOutcome, Checker, ConstraintSet, Counterexample};
use crate::eval::{EvalError, Filling, ModelRunner, Runner, Value};
use crate::syntax::{
    holes, is_hidden, node_at, node_count, parent_path, pretty_program, replace_at, Expr, HoleId, Path, Program,
};
use crate::synth::{
    synthesize, verify_filling, Budget, Conflict, CostModel, PropertySuite, SynthesisOutcome, SynthesisTask,
};
use crate::types::infer;

/// Why a program needs repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    Counterexample(Counterexample),
    /// A hole for which no filling could be found.
    FailedHole(HoleId),
}

/// Where to cut: the student node whose value first differs from the
/// expected output, or the parent of a failed hole. Falls back to the
/// entry's body.
pub fn blame(ex: &Exercise, p: &Program, evidence: &Evidence, fuel: u64) -> Path {
    let root = Path::binding(p.binding_index(&ex.entry).unwrap_or(0));
    let path = match evidence {
        Evidence::Counterexample(c) => Runner { fuel, ..Runner::direct(p, &ex.entry) }
            .mismatch_path(&c.input, &c.expected)
            .unwrap_or_else(|| root.clone()),
        Evidence::FailedHole(h) => match holes(p).into_iter().find(|i| i.id == *h) {
            Some(info) => parent_path(&info.path).unwrap_or(info.path),
            None => root.clone(),
        },
    };
    widen(p, path)
}

/// Moves a cut off the pattern-matching scaffolding introduced by
/// equations, up to the outermost compiler-introduced lambda.
fn widen(p: &Program, mut path: Path) -> Path {
    let scaffold = |e: &Expr| match e {
        Expr::Lam(x, _) => is_hidden(x),
        Expr::Case(s, _) => match s.as_ref() {
            Expr::Var(x) => is_hidden(x),
            Expr::Tuple(es) => es.iter().all(|e| matches!(e, Expr::Var(x) if is_hidden(x))),
            _ => false,
        },
        _ => false,
    };
    if !node_at(p, &path).is_some_and(scaffold) {
        return path;
    }
    while let Some(up) = parent_path(&path) {
        if !node_at(p, &up).is_some_and(|e| matches!(e, Expr::Lam(x, _) if is_hidden(x))) {
            break;
        }
        path = up;
    }
    path
}

/// Everything needed to analyse one candidate program.
#[derive(Clone, Copy)]
pub struct Settings<'s> {
    pub budget: Budget,
    pub fuel: u64,
    pub cost_model: &'s CostModel,
}

/// What checking and synthesis found for one program.
#[derive(Debug, Clone)]
pub enum Analysis {
    /// Parse and type errors are handled before this point.
    TypeError,
    Counterexample(Counterexample),
    Inconclusive { input: Value, reason: EvalError },
    Conflict { conflict: Conflict, constraints: ConstraintSet },
    Filled { filling: Filling, cost: u32, constraints: ConstraintSet },
    Exhausted { hole: Option<HoleId> },
    Timeout { hole: Option<HoleId> },
    /// The filling synthesis produced failed the final verification.
    Unverified { hole: Option<HoleId> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub dequeued: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Checks `p` against the exercise and, if it has holes, searches for a
/// verified filling.
pub fn analyse(ex: &Exercise, p: &Program, s: Settings<'_>) -> (Analysis, SearchStats) {
    let mut stats = SearchStats::default();
    let Ok(typed) = infer(p, &ex.library, &ex.entry, &ex.signature) else {
        return (Analysis::TypeError, stats);
    };
    let model = ModelRunner::new(&ex.models[0], &ex.entry, s.fuel);
    let checker = Checker { model: Some(&model), fuel: s.fuel, ..Checker::new(p, &ex.entry) };
    let constraints = match checker.check_all(&ex.examples) {
        CheckOutcome::Counterexample(c) => return (Analysis::Counterexample(c), stats),
        CheckOutcome::Inconclusive { input, reason } => return (Analysis::Inconclusive { input, reason }, stats),
        CheckOutcome::Constraints(cs) => cs,
    };
    if !p.has_holes() {
        return (Analysis::Filled { filling: Filling::new(), cost: 0, constraints }, stats);
    }
    let task = SynthesisTask {
        typed: &typed,
        library: &ex.library,
        model: Some(&model),
        examples: &ex.examples,
        constraints: &constraints,
        budget: s.budget,
        fuel: s.fuel,
    };
    let report = synthesize(&task, s.cost_model);
    stats = SearchStats { dequeued: report.dequeued, elapsed: report.elapsed };
    let analysis = match report.outcome {
        SynthesisOutcome::Conflict(conflict) => Analysis::Conflict { conflict, constraints },
        SynthesisOutcome::Exhausted { hole } => Analysis::Exhausted { hole },
        SynthesisOutcome::Timeout { hole } => Analysis::Timeout { hole },
        SynthesisOutcome::Success { filling, cost } => {
            let inputs = ex.inputs();
            let suite = PropertySuite { program: &ex.properties, names: &ex.property_names, inputs: &inputs };
            match verify_filling(p, &ex.entry, &filling, &ex.examples, Some(suite), s.fuel) {
                Ok(()) => Analysis::Filled { filling, cost, constraints },
                Err(_) => Analysis::Unverified { hole: filling.keys().next().copied() },
            }
        }
    };
    (analysis, stats)
}

/// A verified repair of a student program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Repair {
    /// The repaired program, holes filled.
    pub source: String,
    /// Maximal replaced subtrees of the original program.
    pub replaced: Vec<Path>,
    #[serde(skip)]
    pub program: Program,
    #[serde(skip)]
    pub filling: Filling,
    pub cost: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recovery {
    /// The program after each cut, before synthesis.
    pub states: Vec<String>,
    pub repair: Option<Repair>,
    pub iterations: usize,
    pub dequeued: usize,
}

/// Repeatedly cuts the blamed subtree out of `p`, replacing it with a hole,
/// until synthesis finds a verified filling. Every cut removes at least one
/// node, so this stops within `node_count(p)` iterations.
pub fn recover(ex: &Exercise, p: &Program, first: Evidence, s: Settings<'_>) -> Recovery {
    let mut current = p.clone();
    let mut evidence = first;
    let mut out = Recovery { states: Vec::new(), repair: None, iterations: 0, dequeued: 0 };
    let mut replaced: Vec<Path> = Vec::new();
    for _ in 0..node_count(p) {
        let path = blame(ex, &current, &evidence, s.fuel);
        if node_at(&current, &path).is_none_or(Expr::is_hole) {
            break;
        }
        let fresh = current.hole_ids().into_iter().max().map_or(0, |h| h + 1);
        let Ok(next) = replace_at(&current, &path, Expr::Hole(fresh)) else { break };
        current = next;
        replaced.retain(|r| !r.starts_with(&path));
        replaced.push(path);
        out.iterations += 1;
        out.states.push(pretty_program(&current));
        let (analysis, stats) = analyse(ex, &current, s);
        out.dequeued += stats.dequeued;
        evidence = match analysis {
            Analysis::Filled { filling, cost, .. } => {
                let program = crate::synth::apply_filling(&current, &filling);
                out.repair = Some(Repair {
                    source: pretty_program(&program),
                    replaced: replaced.clone(),
                    program,
                    filling,
                    cost,
                });
                return out;
            }
            Analysis::Counterexample(c) => Evidence::Counterexample(c),
            Analysis::Conflict { conflict, .. } => Evidence::FailedHole(conflict.hole),
            Analysis::Exhausted { hole } | Analysis::Timeout { hole } | Analysis::Unverified { hole } => {
                Evidence::FailedHole(hole.unwrap_or(fresh))
            }
            Analysis::TypeError | Analysis::Inconclusive { .. } => Evidence::FailedHole(fresh),
        };
    }
    out
}
