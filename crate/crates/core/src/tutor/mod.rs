//! Exercises and the feedback pipeline: check a (partial) student program
//! against the exercise, classify it, and attach evidence and hints.

mod exercise;
mod recover;
mod specs;

pub use exercise::{
    generate_inputs, validate, AuthoringError, Exercise, ExerciseDoc, GeneratorParams, LoadError, PropertyDoc,
    MY_SORT,
};
pub use recover::{analyse, blame, recover, Analysis, Evidence, Recovery, Repair, SearchStats, Settings};
pub use specs::{hole_specs, HoleSpec, SPEC_EXAMPLES};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::check::{Counterexample, LocalExample};
use crate::eval::{eval_property, EntryBinding, EvalError, PartialResult, Value, DEFAULT_FUEL};
use crate::syntax::{parse_program, HoleId, ParseError, Program};
use crate::synth::{verify_filling, Budget, Conflict, PropertySuite};
use crate::types::{infer, TypeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// Hole-free and passes every example and property.
    Correct,
    /// The holes can be filled to a correct program.
    OnTrack,
    /// No filling of the holes can work.
    OffTrack,
    /// No filling was found within the search budget.
    TooComplex,
    /// Evaluation did not finish.
    Inconclusive,
}

impl Classification {
    /// Process exit status for command-line use.
    pub fn exit_code(self) -> i32 {
        match self {
            Classification::Correct => 0,
            Classification::OnTrack => 1,
            Classification::OffTrack => 2,
            Classification::TooComplex | Classification::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackOptions {
    pub budget: Budget,
    pub fuel: u64,
    /// Search for a repair when the program is off track.
    pub recovery: bool,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        FeedbackOptions { budget: Budget::default(), fuel: DEFAULT_FUEL, recovery: true }
    }
}

/// Why the program could not be analysed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Diagnostic {
    Syntax { message: String, error: ParseError },
    Type { message: String, error: TypeError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleReport {
    pub input: Value,
    pub expected: Value,
    pub actual: PartialResult,
    /// `my_sort [3,2,1] == [3,2,1]`
    pub text: String,
    pub violated: Vec<String>,
    /// Properties were not checked because the actual output has holes.
    pub properties_skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictPairReport {
    pub left: LocalExample,
    pub right: LocalExample,
    /// `f 2 == 2` and `f 2 == 1`
    pub text: [String; 2],
    pub inputs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictReport {
    pub hole: HoleId,
    pub pairs: Vec<ConflictPairReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InconclusiveReport {
    pub input: Value,
    pub reason: EvalError,
}

/// Suggested direction when the attempt is more complex than needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Advice {
    /// Head function of a model solution, e.g. `foldr`.
    pub construct: String,
    pub heuristic: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Latency {
    pub total_ms: u64,
    pub synthesis_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub budget_ms: u64,
    pub fuel: u64,
    pub examples: usize,
    /// Candidates dequeued by the first synthesis run.
    pub dequeued: usize,
    pub recovery_iterations: usize,
    pub latency: Latency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Feedback {
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conflict: Option<ConflictReport>,
    /// Hole for which synthesis ran out of candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_hole: Option<HoleId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<InconclusiveReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hole_specs: Vec<HoleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery: Option<Recovery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advice: Option<Advice>,
    pub diagnostics: Diagnostics,
}

impl Feedback {
    fn new(classification: Classification) -> Feedback {
        Feedback {
            classification,
            diagnostic: None,
            counterexample: None,
            conflict: None,
            failed_hole: None,
            inconclusive: None,
            hole_specs: Vec::new(),
            recovery: None,
            advice: None,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Properties violated by the student's observed output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub violated: Vec<String>,
    pub skipped: bool,
}

/// Evaluates each property with calls to the entry function answered by
/// the counterexample's observed output.
pub fn check_properties(ex: &Exercise, cex: &Counterexample, fuel: u64) -> PropertyCheck {
    let Some(output) = cex.actual.to_value() else {
        return PropertyCheck { violated: Vec::new(), skipped: true };
    };
    let violated = ex
        .property_names
        .iter()
        .filter(|name| {
            let binding = EntryBinding::Observed { input: cex.input.clone(), output: output.clone() };
            !matches!(
                eval_property(&ex.properties, name, &ex.entry, binding, &cex.input, fuel),
                Ok(PartialResult::Bool(true))
            )
        })
        .cloned()
        .collect();
    PropertyCheck { violated, skipped: false }
}

/// The function a model solution is built around.
pub fn skeleton_head(model: &Program, entry: &str) -> Option<String> {
    use crate::syntax::Expr;
    let mut e = &model.binding(entry)?.body;
    loop {
        e = match e {
            Expr::Lam(_, b) | Expr::Let(_, b) => b,
            Expr::App(f, _) => f,
            Expr::Var(n) => return Some(n.clone()),
            Expr::BinOp(op, ..) | Expr::OpRef(op) => return Some(op.symbol().to_string()),
            Expr::Case(..) => return Some("case".to_string()),
            _ => return None,
        };
    }
}

fn conflict_report(c: &Conflict) -> ConflictReport {
    let head = |l: &LocalExample| if l.args.is_empty() { format!("?{}", c.hole) } else { "f".to_string() };
    ConflictReport {
        hole: c.hole,
        pairs: c
            .pairs
            .iter()
            .map(|p| ConflictPairReport {
                text: [p.left.render(&head(&p.left)), p.right.render(&head(&p.right))],
                left: p.left.clone(),
                right: p.right.clone(),
                inputs: p.inputs.clone(),
            })
            .collect(),
    }
}

fn millis(d: Duration) -> u64 {
    d.as_millis().try_into().unwrap_or(u64::MAX)
}

/// Checks a student program against an exercise and classifies it.
pub fn give_feedback(ex: &Exercise, source: &str, opts: &FeedbackOptions) -> Feedback {
    let start = Instant::now();
    let mut fb = analyse_source(ex, source, opts);
    fb.diagnostics.budget_ms = opts.budget.time_ms;
    fb.diagnostics.fuel = opts.fuel;
    fb.diagnostics.examples = ex.examples.len();
    fb.diagnostics.latency.total_ms = millis(start.elapsed());
    fb
}

fn analyse_source(ex: &Exercise, source: &str, opts: &FeedbackOptions) -> Feedback {
    let p = match parse_program(source) {
        Ok(p) => p,
        Err(error) => {
            let mut fb = Feedback::new(Classification::OffTrack);
            fb.diagnostic = Some(Diagnostic::Syntax { message: error.to_string(), error });
            return fb;
        }
    };
    if let Err(error) = infer(&p, &ex.library, &ex.entry, &ex.signature) {
        let mut fb = Feedback::new(Classification::OffTrack);
        fb.diagnostic = Some(Diagnostic::Type { message: error.to_string(), error });
        return fb;
    }
    let settings = Settings { budget: opts.budget, fuel: opts.fuel, cost_model: &ex.cost_model };
    let (analysis, stats) = analyse(ex, &p, settings);
    let mut fb = Feedback::new(Classification::OffTrack);
    fb.diagnostics.dequeued = stats.dequeued;
    fb.diagnostics.latency.synthesis_ms = millis(stats.elapsed);
    let evidence = match analysis {
        Analysis::Counterexample(c) => {
            let props = check_properties(ex, &c, opts.fuel);
            fb.counterexample = Some(CounterexampleReport {
                input: c.input.clone(),
                expected: c.expected.clone(),
                actual: c.actual.clone(),
                text: c.render(&ex.entry),
                violated: props.violated,
                properties_skipped: props.skipped,
            });
            Evidence::Counterexample(c)
        }
        Analysis::Conflict { conflict, .. } => {
            fb.conflict = Some(conflict_report(&conflict));
            Evidence::FailedHole(conflict.hole)
        }
        Analysis::Exhausted { hole } | Analysis::Unverified { hole } => {
            let hole = hole.or_else(|| p.hole_ids().first().copied()).unwrap_or(0);
            fb.failed_hole = Some(hole);
            Evidence::FailedHole(hole)
        }
        Analysis::Filled { filling, constraints, .. } => {
            if p.has_holes() {
                fb.classification = Classification::OnTrack;
                fb.hole_specs = hole_specs(ex, &p, &filling, &constraints, opts.fuel);
                return fb;
            }
            let inputs = ex.inputs();
            let suite = PropertySuite { program: &ex.properties, names: &ex.property_names, inputs: &inputs };
            match verify_filling(&p, &ex.entry, &filling, &ex.examples, Some(suite), opts.fuel) {
                Ok(()) => fb.classification = Classification::Correct,
                Err(_) => fb.classification = Classification::Inconclusive,
            }
            return fb;
        }
        Analysis::Timeout { .. } => {
            fb.classification = Classification::TooComplex;
            fb.advice = skeleton_head(&ex.models[0], &ex.entry).map(|construct| Advice { construct, heuristic: true });
            return fb;
        }
        Analysis::Inconclusive { input, reason } => {
            fb.classification = Classification::Inconclusive;
            fb.inconclusive = Some(InconclusiveReport { input, reason });
            return fb;
        }
        Analysis::TypeError => return fb,
    };
    if opts.recovery {
        let r = recover(ex, &p, evidence, settings);
        fb.diagnostics.recovery_iterations = r.iterations;
        fb.recovery = Some(r);
    }
    fb
}
