use std::fmt;

use serde::{Serialize, Serializer};

use crate::syntax::HoleId;

/// A fully evaluated, hole-free first-order value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn ints(xs: &[i64]) -> Value {
        Value::List(xs.iter().map(|x| Value::Int(*x)).collect())
    }

    /// Number of constructors, used to order examples smallest first.
    pub fn size(&self) -> usize {
        match self {
            Value::Int(_) | Value::Bool(_) => 1,
            Value::List(vs) | Value::Tuple(vs) => 1 + vs.iter().map(Value::size).sum::<usize>(),
        }
    }

    /// Whether `self` occurs strictly inside `root`: as an element, a
    /// proper suffix of a list, or a tuple component, at any depth.
    pub fn is_strict_part_of(&self, root: &Value) -> bool {
        match root {
            Value::Int(_) | Value::Bool(_) => false,
            Value::Tuple(vs) => vs.iter().any(|v| v == self || self.is_strict_part_of(v)),
            Value::List(vs) => (0..vs.len()).any(|i| {
                let suffix = &vs[i + 1..];
                matches!(self, Value::List(s) if s.as_slice() == suffix)
                    || vs[i] == *self
                    || self.is_strict_part_of(&vs[i])
            }),
        }
    }

    /// Rendering for use as a function argument: negative numbers get
    /// parentheses.
    pub fn atom(&self) -> String {
        match self {
            Value::Int(n) if *n < 0 => format!("({n})"),
            v => v.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            Value::List(vs) => {
                let items: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "[{}]", items.join(","))
            }
            Value::Tuple(vs) => {
                let items: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", items.join(","))
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(n) => s.serialize_i64(*n),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::List(vs) | Value::Tuple(vs) => vs.serialize(s),
        }
    }
}

/// A hole whose value evaluation needed, with what was known about the
/// position it was needed in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Indeterminate {
    pub hole: HoleId,
    /// Visible variables at the hole, outermost first; `None` when some
    /// of them could not be evaluated to a value.
    pub env: Option<Vec<(String, Value)>>,
    /// Arguments the hole was applied to; `None` when some are not values.
    pub args: Option<Vec<Value>>,
    /// The hole's result was scrutinized (by a case or primitive) rather
    /// than returned.
    pub opaque: bool,
}

impl Indeterminate {
    /// Whether this position yields a local example.
    pub fn is_ground(&self) -> bool {
        !self.opaque && self.env.is_some() && self.args.is_some()
    }
}

/// Result of live evaluation: a value that may contain holes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PartialResult {
    Int(i64),
    Bool(bool),
    Nil,
    Cons(Box<PartialResult>, Box<PartialResult>),
    Tuple(Vec<PartialResult>),
    Function,
    Indeterminate(Box<Indeterminate>),
    Error(String),
    /// Evaluation ran out of fuel (or diverged) before reaching this part.
    Unforced,
}

impl PartialResult {
    pub fn from_value(v: &Value) -> PartialResult {
        match v {
            Value::Int(n) => PartialResult::Int(*n),
            Value::Bool(b) => PartialResult::Bool(*b),
            Value::Tuple(vs) => PartialResult::Tuple(vs.iter().map(PartialResult::from_value).collect()),
            Value::List(vs) => vs.iter().rev().fold(PartialResult::Nil, |t, h| {
                PartialResult::Cons(Box::new(PartialResult::from_value(h)), Box::new(t))
            }),
        }
    }

    pub fn to_value(&self) -> Option<Value> {
        match self {
            PartialResult::Int(n) => Some(Value::Int(*n)),
            PartialResult::Bool(b) => Some(Value::Bool(*b)),
            PartialResult::Tuple(ps) => ps.iter().map(PartialResult::to_value).collect::<Option<_>>().map(Value::Tuple),
            PartialResult::Nil | PartialResult::Cons(..) => {
                let mut out = Vec::new();
                let mut cur = self;
                while let PartialResult::Cons(h, t) = cur {
                    out.push(h.to_value()?);
                    cur = t;
                }
                matches!(cur, PartialResult::Nil).then_some(Value::List(out))
            }
            _ => None,
        }
    }

    pub fn has_holes(&self) -> bool {
        self.any(&|p| matches!(p, PartialResult::Indeterminate(_)))
    }

    pub fn has_unforced(&self) -> bool {
        self.any(&|p| matches!(p, PartialResult::Unforced))
    }

    fn any(&self, pred: &dyn Fn(&PartialResult) -> bool) -> bool {
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            if pred(p) {
                return true;
            }
            match p {
                PartialResult::Cons(h, t) => {
                    stack.push(h);
                    stack.push(t);
                }
                PartialResult::Tuple(ps) => stack.extend(ps.iter()),
                _ => {}
            }
        }
        false
    }

    fn is_atomic(&self) -> bool {
        match self {
            PartialResult::Int(n) => *n >= 0,
            PartialResult::Cons(..) => self.proper_list().is_some(),
            PartialResult::Indeterminate(i) => i.args.as_ref().is_none_or(|a| a.is_empty()),
            PartialResult::Error(_) => false,
            _ => true,
        }
    }

    fn proper_list(&self) -> Option<Vec<&PartialResult>> {
        let mut out = Vec::new();
        let mut cur = self;
        while let PartialResult::Cons(h, t) = cur {
            out.push(h.as_ref());
            cur = t;
        }
        matches!(cur, PartialResult::Nil).then_some(out)
    }

    pub fn atom(&self) -> String {
        if self.is_atomic() {
            self.to_string()
        } else {
            format!("({self})")
        }
    }
}

impl fmt::Display for PartialResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartialResult::Int(n) => write!(f, "{n}"),
            PartialResult::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            PartialResult::Nil => f.write_str("[]"),
            PartialResult::Cons(h, t) => {
                if let Some(items) = self.proper_list() {
                    let items: Vec<String> = items.iter().map(|p| p.to_string()).collect();
                    return write!(f, "[{}]", items.join(","));
                }
                write!(f, "{}:", h.atom())?;
                match t.as_ref() {
                    PartialResult::Cons(..) => write!(f, "{t}"),
                    other => f.write_str(&other.atom()),
                }
            }
            PartialResult::Tuple(ps) => {
                let items: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "({})", items.join(","))
            }
            PartialResult::Function => f.write_str("<function>"),
            PartialResult::Indeterminate(i) => {
                f.write_str("?")?;
                for a in i.args.iter().flatten() {
                    write!(f, " {}", a.atom())?;
                }
                Ok(())
            }
            PartialResult::Error(msg) => write!(f, "error \"{msg}\""),
            PartialResult::Unforced => f.write_str("..."),
        }
    }
}

impl Serialize for PartialResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        if let Some(v) = self.to_value() {
            return v.serialize(s);
        }
        match self {
            PartialResult::Cons(..) | PartialResult::Nil => {
                let mut items: Vec<&PartialResult> = Vec::new();
                let mut cur = self;
                while let PartialResult::Cons(h, t) = cur {
                    items.push(h);
                    cur = t;
                }
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("elements", &items)?;
                m.serialize_entry("rest", cur)?;
                m.end()
            }
            PartialResult::Tuple(ps) => ps.serialize(s),
            PartialResult::Indeterminate(i) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("hole", &i.hole)?;
                m.end()
            }
            PartialResult::Error(msg) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("error", msg)?;
                m.end()
            }
            PartialResult::Function => s.serialize_str("<function>"),
            _ => s.serialize_str("..."),
        }
    }
}
