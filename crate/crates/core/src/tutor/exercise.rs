use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::GlobalExample;
use crate::eval::{eval_property, run_model, EntryBinding, EvalError, PartialResult, Value, DEFAULT_FUEL};
use crate::prelude::prelude;
use crate::syntax::{parse_program, parse_signature, Binding, Program};
use crate::synth::{learn_cost_model, CostModel, CostWeights};
use crate::types::{infer, infer_bindings, Scheme, Type, TypeEnv};

/// Input generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    /// Exhaustive lists up to this length.
    pub max_len: usize,
    /// Integers range over `0..=max_val`.
    pub max_val: i64,
    pub random_count: usize,
    pub random_max_len: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { max_len: 4, max_val: 3, random_count: 20, random_max_len: 6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDoc {
    pub name: String,
    pub source: String,
}

/// An exercise as authored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseDoc {
    pub id: String,
    pub description: String,
    /// `name :: type`
    pub signature: String,
    /// Library names students may use.
    pub prelude: Vec<String>,
    pub solutions: Vec<String>,
    #[serde(default)]
    pub properties: Vec<PropertyDoc>,
    #[serde(default)]
    pub generator: GeneratorParams,
    #[serde(default)]
    pub cost_weights: CostWeights,
}

/// A mistake in an exercise definition, with a witness where there is one.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuthoringError {
    #[error("signature: {message}")]
    Signature { message: String },
    #[error("unknown library name `{name}` in the allow-list")]
    UnknownName { name: String },
    #[error("exercise has no model solution")]
    NoSolution,
    #[error("solution {index}: {message}")]
    Solution { index: usize, message: String },
    #[error("property `{name}`: {message}")]
    Property { name: String, message: String },
    #[error("solution {index} fails on {input}: {error}")]
    SolutionFails { index: usize, input: Value, error: EvalError },
    #[error("solutions disagree on {input}: solution 0 gives {first}, solution {index} gives {other}")]
    SolutionsDisagree { input: Value, index: usize, first: Value, other: Value },
    #[error("property `{name}` fails for solution {index} on {input}: {result}")]
    PropertyFails { name: String, index: usize, input: Value, result: String },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed exercise document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid exercise `{id}`: {}", .errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid { id: String, errors: Vec<AuthoringError> },
}

/// A validated exercise, ready to give feedback.
#[derive(Debug, Clone)]
pub struct Exercise {
    pub id: String,
    pub description: String,
    pub signature_text: String,
    pub entry: String,
    pub signature: Type,
    /// Library names students may use.
    pub allowed: Vec<String>,
    pub library: TypeEnv,
    pub models: Vec<Program>,
    pub properties: Program,
    pub property_names: Vec<String>,
    pub generator: GeneratorParams,
    /// Generated inputs, smallest first, with the first model's outputs.
    pub examples: Vec<GlobalExample>,
    pub cost_model: CostModel,
}

impl Exercise {
    pub fn from_json(src: &str) -> Result<Exercise, LoadError> {
        let doc: ExerciseDoc = serde_json::from_str(src)?;
        let id = doc.id.clone();
        validate(doc).map_err(|errors| LoadError::Invalid { id, errors })
    }

    /// The sorting exercise shipped with the engine.
    pub fn bundled() -> Exercise {
        Exercise::from_json(MY_SORT).expect("bundled exercise is valid")
    }

    pub fn inputs(&self) -> Vec<Value> {
        self.examples.iter().map(|e| e.input.clone()).collect()
    }

    /// The entry's argument type.
    pub fn input_type(&self) -> &Type {
        self.signature.uncurry().0.first().copied().unwrap_or(&self.signature)
    }
}

pub const MY_SORT: &str = include_str!("../../../../exercises/my_sort.json");

/// Checks an authored exercise: every text parses and type-checks, the
/// solutions agree on every generated input, and every property holds.
pub fn validate(doc: ExerciseDoc) -> Result<Exercise, Vec<AuthoringError>> {
    let mut errors = Vec::new();
    let lib = prelude();
    let (entry, signature) = match parse_signature(&doc.signature) {
        Ok(s) => s,
        Err(e) => return Err(vec![AuthoringError::Signature { message: e.to_string() }]),
    };
    if !signature.is_function() {
        return Err(vec![AuthoringError::Signature { message: format!("{signature} is not a function type") }]);
    }
    for name in &doc.prelude {
        if !lib.types.contains(name) {
            errors.push(AuthoringError::UnknownName { name: name.clone() });
        }
    }
    if doc.solutions.is_empty() {
        errors.push(AuthoringError::NoSolution);
    }
    let mut models = Vec::new();
    for (index, src) in doc.solutions.iter().enumerate() {
        let checked = parse_program(src)
            .map_err(|e| e.to_string())
            .and_then(|p| infer(&p, &lib.types, &entry, &signature).map(|_| p).map_err(|e| e.to_string()));
        match checked {
            Ok(p) if p.has_holes() => {
                errors.push(AuthoringError::Solution { index, message: "solution contains holes".into() })
            }
            Ok(p) => models.push(p),
            Err(message) => errors.push(AuthoringError::Solution { index, message }),
        }
    }
    let (properties, property_names) = check_properties(&doc.properties, &entry, &signature, &lib.types, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }

    let inputs = generate_inputs(signature.uncurry().0[0], &doc.generator);
    let fuel = DEFAULT_FUEL;
    let mut examples = Vec::new();
    for input in &inputs {
        let first = match run_model(&models[0], &entry, input, fuel) {
            Ok(v) => v,
            Err(error) => {
                errors.push(AuthoringError::SolutionFails { index: 0, input: input.clone(), error });
                continue;
            }
        };
        for (index, m) in models.iter().enumerate().skip(1) {
            match run_model(m, &entry, input, fuel) {
                Ok(other) if other != first => errors.push(AuthoringError::SolutionsDisagree {
                    input: input.clone(),
                    index,
                    first: first.clone(),
                    other,
                }),
                Ok(_) => {}
                Err(error) => errors.push(AuthoringError::SolutionFails { index, input: input.clone(), error }),
            }
        }
        examples.push(GlobalExample::new(input.clone(), first));
    }
    for name in &property_names {
        for (index, m) in models.iter().enumerate() {
            let failing = inputs.iter().find_map(|input| {
                match eval_property(&properties, name, &entry, EntryBinding::Program(m), input, fuel) {
                    Ok(PartialResult::Bool(true)) => None,
                    Ok(r) => Some((input, r.to_string())),
                    Err(e) => Some((input, e.to_string())),
                }
            });
            if let Some((input, result)) = failing {
                errors.push(AuthoringError::PropertyFails { name: name.clone(), index, input: input.clone(), result });
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let library = lib.restricted(&doc.prelude);
    let cost_model = learn_cost_model(&models, &library, doc.cost_weights);
    Ok(Exercise {
        id: doc.id,
        description: doc.description,
        signature_text: doc.signature,
        entry,
        signature,
        allowed: doc.prelude,
        library,
        models,
        properties,
        property_names,
        generator: doc.generator,
        examples,
        cost_model,
    })
}

fn check_properties(
    docs: &[PropertyDoc],
    entry: &str,
    signature: &Type,
    library: &TypeEnv,
    errors: &mut Vec<AuthoringError>,
) -> (Program, Vec<String>) {
    let mut env = library.clone();
    env.insert(entry, Scheme::mono(signature.clone()));
    let input = signature.uncurry().0[0].clone();
    let mut bindings: Vec<Binding> = Vec::new();
    let mut names = Vec::new();
    for doc in docs {
        let parsed = match parse_program(&doc.source) {
            Ok(p) => p,
            Err(e) => {
                errors.push(AuthoringError::Property { name: doc.name.clone(), message: e.to_string() });
                continue;
            }
        };
        if parsed.binding(&doc.name).is_none() {
            errors.push(AuthoringError::Property { name: doc.name.clone(), message: "source does not define it".into() });
            continue;
        }
        let expected = Type::fun(input.clone(), Type::Bool);
        match infer_bindings(&parsed.bindings, &env) {
            Ok(types) => {
                let ty = types.get(&doc.name).map(|s| s.instantiate(&mut || 0));
                if ty.as_ref().is_none_or(|t| crate::types::unify(t, &expected).is_err()) {
                    let found = ty.map_or_else(String::new, |t| t.to_string());
                    errors.push(AuthoringError::Property {
                        name: doc.name.clone(),
                        message: format!("expected type {expected}, found {found}"),
                    });
                    continue;
                }
            }
            Err(e) => {
                errors.push(AuthoringError::Property { name: doc.name.clone(), message: e.to_string() });
                continue;
            }
        }
        names.push(doc.name.clone());
        bindings.extend(parsed.bindings);
    }
    (Program { bindings }, names)
}

/// Every value of `ty` up to the exhaustive bounds, then seeded random
/// values, without duplicates, smallest first.
pub fn generate_inputs(ty: &Type, params: &GeneratorParams) -> Vec<Value> {
    let mut out: BTreeSet<(usize, Value)> = BTreeSet::new();
    for v in enumerate_values(ty, params.max_len, params.max_val) {
        out.insert((v.size(), v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.random_count {
        let v = random_value(ty, params.random_max_len, params.max_val, &mut rng);
        out.insert((v.size(), v));
    }
    out.into_iter().map(|(_, v)| v).collect()
}

fn enumerate_values(ty: &Type, max_len: usize, max_val: i64) -> Vec<Value> {
    match ty {
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Type::List(t) => {
            let elems = enumerate_values(t, max_len.saturating_sub(1).min(2), max_val);
            let mut out = vec![Value::List(vec![])];
            let mut layer: Vec<Vec<Value>> = vec![vec![]];
            for _ in 0..max_len {
                layer = layer
                    .iter()
                    .flat_map(|xs| {
                        elems.iter().map(move |e| {
                            let mut ys = xs.clone();
                            ys.push(e.clone());
                            ys
                        })
                    })
                    .collect();
                out.extend(layer.iter().cloned().map(Value::List));
            }
            out
        }
        Type::Tuple(ts) => ts.iter().fold(vec![Value::Tuple(vec![])], |acc, t| {
            let vs = enumerate_values(t, max_len, max_val);
            acc.iter()
                .flat_map(|a| {
                    vs.iter().map(move |v| {
                        let Value::Tuple(mut xs) = a.clone() else { unreachable!() };
                        xs.push(v.clone());
                        Value::Tuple(xs)
                    })
                })
                .collect()
        }),
        _ => (0..=max_val).map(Value::Int).collect(),
    }
}

fn random_value(ty: &Type, max_len: usize, max_val: i64, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Type::Bool => Value::Bool(rng.random()),
        Type::List(t) => {
            let n = rng.random_range(0..=max_len);
            Value::List((0..n).map(|_| random_value(t, max_len.min(2), max_val, rng)).collect())
        }
        Type::Tuple(ts) => Value::Tuple(ts.iter().map(|t| random_value(t, max_len, max_val, rng)).collect()),
        _ => Value::Int(rng.random_range(0..=max_val)),
    }
}
