use std::cell::RefCell;
use std::collections::HashMap;

use super::session::{Fail, Session};
use super::{EvalError, Value};
use crate::prelude::prelude;
use crate::syntax::Program;

/// Runs one model solution, remembering answers per input.
pub struct ModelRunner<'m> {
    program: &'m Program,
    entry: &'m str,
    fuel: u64,
    cache: RefCell<HashMap<Value, Result<Value, EvalError>>>,
}

impl<'m> ModelRunner<'m> {
    pub fn new(program: &'m Program, entry: &'m str, fuel: u64) -> ModelRunner<'m> {
        ModelRunner { program, entry, fuel, cache: RefCell::new(HashMap::new()) }
    }

    pub fn program(&self) -> &'m Program {
        self.program
    }

    pub fn run(&self, input: &Value) -> Result<Value, EvalError> {
        if let Some(r) = self.cache.borrow().get(input) {
            return r.clone();
        }
        let r = run_model(self.program, self.entry, input, self.fuel);
        self.cache.borrow_mut().insert(input.clone(), r.clone());
        r
    }
}

/// Runs a hole-free program's entry function on `input` to a value.
pub fn run_model(model: &Program, entry: &str, input: &Value, fuel: u64) -> Result<Value, EvalError> {
    let mut s = Session::new(prelude(), fuel);
    let scope = s.push_scope(Some(0), &model.bindings);
    let f = s.global(scope, entry).ok_or_else(|| EvalError::Unbound(entry.to_string()))?;
    let x = s.inject(input);
    let out = s
        .force(f)
        .and_then(|fv| s.apply(fv, x))
        .map(|v| s.alloc_result(v))
        .and_then(|t| s.deep(t));
    match out {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(_)) => Err(EvalError::NotAValue),
        Err(Fail::Fuel) => Err(EvalError::FuelExhausted),
        Err(Fail::Loop) => Err(EvalError::Diverged),
        Err(Fail::Error(m)) => Err(EvalError::Primitive(m.to_string())),
    }
}
