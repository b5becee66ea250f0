//! Hindley-Milner types, unification and inference.

mod infer;

pub use infer::{infer, infer_bindings, op_scheme, TypeEnv, TypeError, TypedProgram};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub type TyVar = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Bool,
    List(Box<Type>),
    Tuple(Vec<Type>),
    Fun(Box<Type>, Box<Type>),
    Var(TyVar),
}

impl Serialize for Type {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Type {
    pub fn list(t: Type) -> Type {
        Type::List(Box::new(t))
    }

    pub fn fun(a: Type, b: Type) -> Type {
        Type::Fun(Box::new(a), Box::new(b))
    }

    /// `a -> b -> ... -> r` from argument types and a result.
    pub fn arrows(args: impl IntoIterator<Item = Type>, result: Type) -> Type {
        let args: Vec<Type> = args.into_iter().collect();
        args.into_iter().rev().fold(result, |r, a| Type::fun(a, r))
    }

    /// Splits off argument types: `a -> b -> r` gives `([a, b], r)`.
    pub fn uncurry(&self) -> (Vec<&Type>, &Type) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Type::Fun(a, r) = cur {
            args.push(a.as_ref());
            cur = r;
        }
        (args, cur)
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Type::Fun(..))
    }

    pub fn free_vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Var(v) => {
                out.insert(*v);
            }
            Type::List(t) => t.collect_vars(out),
            Type::Tuple(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Type::Fun(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Type::Int | Type::Bool => {}
        }
    }

    pub fn occurs(&self, v: TyVar) -> bool {
        match self {
            Type::Var(w) => *w == v,
            Type::List(t) => t.occurs(v),
            Type::Tuple(ts) => ts.iter().any(|t| t.occurs(v)),
            Type::Fun(a, b) => a.occurs(v) || b.occurs(v),
            Type::Int | Type::Bool => false,
        }
    }

    pub fn apply(&self, s: &Subst) -> Type {
        match self {
            Type::Var(v) => match s.0.get(v) {
                Some(t) => t.apply(s),
                None => self.clone(),
            },
            Type::List(t) => Type::list(t.apply(s)),
            Type::Tuple(ts) => Type::Tuple(ts.iter().map(|t| t.apply(s)).collect()),
            Type::Fun(a, b) => Type::fun(a.apply(s), b.apply(s)),
            Type::Int | Type::Bool => self.clone(),
        }
    }

    /// Replaces each variable in one pass, without re-substituting.
    pub fn map_vars(&self, f: &impl Fn(TyVar) -> Type) -> Type {
        match self {
            Type::Var(v) => f(*v),
            Type::List(t) => Type::list(t.map_vars(f)),
            Type::Tuple(ts) => Type::Tuple(ts.iter().map(|t| t.map_vars(f)).collect()),
            Type::Fun(a, b) => Type::fun(a.map_vars(f), b.map_vars(f)),
            Type::Int | Type::Bool => self.clone(),
        }
    }

    /// Replaces every remaining type variable with `Int`.
    pub fn default_to_int(&self) -> Type {
        match self {
            Type::Var(_) => Type::Int,
            Type::List(t) => Type::list(t.default_to_int()),
            Type::Tuple(ts) => Type::Tuple(ts.iter().map(Type::default_to_int).collect()),
            Type::Fun(a, b) => Type::fun(a.default_to_int(), b.default_to_int()),
            Type::Int | Type::Bool => self.clone(),
        }
    }

    /// Every sub-term, this type included.
    pub fn subterms(&self) -> Vec<&Type> {
        let mut out = vec![self];
        match self {
            Type::List(t) => out.extend(t.subterms()),
            Type::Tuple(ts) => ts.iter().for_each(|t| out.extend(t.subterms())),
            Type::Fun(a, b) => {
                out.extend(a.subterms());
                out.extend(b.subterms());
            }
            _ => {}
        }
        out
    }
}

fn var_name(v: TyVar) -> String {
    let letter = (b'a' + (v % 26) as u8) as char;
    if v < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", v / 26)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("Int"),
            Type::Bool => f.write_str("Bool"),
            Type::Var(v) => f.write_str(&var_name(*v)),
            Type::List(t) => write!(f, "[{t}]"),
            Type::Tuple(ts) => {
                let items: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", items.join(", "))
            }
            Type::Fun(a, b) => {
                if a.is_function() {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

/// A type quantified over `vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub vars: Vec<TyVar>,
    pub ty: Type,
}

impl Scheme {
    pub fn mono(ty: Type) -> Scheme {
        Scheme { vars: vec![], ty }
    }

    /// Quantifies over every free variable.
    pub fn generalize_all(ty: Type) -> Scheme {
        Scheme { vars: ty.free_vars().into_iter().collect(), ty }
    }

    pub fn instantiate(&self, fresh: &mut impl FnMut() -> TyVar) -> Type {
        if self.vars.is_empty() {
            return self.ty.clone();
        }
        let fresh: HashMap<TyVar, TyVar> = self.vars.iter().map(|v| (*v, fresh())).collect();
        self.ty.map_vars(&|v| Type::Var(fresh.get(&v).copied().unwrap_or(v)))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            let names: Vec<String> = self.vars.iter().map(|v| var_name(*v)).collect();
            write!(f, "forall {}. ", names.join(" "))?;
        }
        write!(f, "{}", self.ty)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst(pub HashMap<TyVar, Type>);

impl Subst {
    pub fn get(&self, v: TyVar) -> Option<&Type> {
        self.0.get(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fully resolved form: every binding applied to a fixpoint, so applying
    /// the result once is the same as applying it twice.
    pub fn normalized(&self) -> Subst {
        Subst(self.0.iter().map(|(k, t)| (*k, t.apply(self))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot match {0} with {1}")]
    Mismatch(Type, Type),
    #[error("occurs check: {0} occurs in {1}")]
    OccursCheck(TyVar, Type),
}

/// Extends `s` so that `a` and `b` become equal.
pub fn unify_in(s: &mut Subst, a: &Type, b: &Type) -> Result<(), UnifyError> {
    let a = a.apply(s);
    let b = b.apply(s);
    match (&a, &b) {
        (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
        (Type::Var(x), t) | (t, Type::Var(x)) => {
            if t.occurs(*x) {
                return Err(UnifyError::OccursCheck(*x, t.clone()));
            }
            s.0.insert(*x, t.clone());
            Ok(())
        }
        (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => Ok(()),
        (Type::List(x), Type::List(y)) => unify_in(s, x, y),
        (Type::Fun(a1, r1), Type::Fun(a2, r2)) => {
            unify_in(s, a1, a2)?;
            unify_in(s, r1, r2)
        }
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                unify_in(s, x, y)?;
            }
            Ok(())
        }
        _ => Err(UnifyError::Mismatch(a.clone(), b.clone())),
    }
}

/// Most general unifier of `a` and `b`.
pub fn unify(a: &Type, b: &Type) -> Result<Subst, UnifyError> {
    let mut s = Subst::default();
    unify_in(&mut s, a, b)?;
    Ok(s.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Type {
        Type::Var(0)
    }

    #[test]
    fn unify_var_with_int() {
        let s = unify(&a(), &Type::Int).unwrap();
        assert_eq!(s.get(0), Some(&Type::Int));
    }

    #[test]
    fn unify_lists() {
        let s = unify(&Type::list(a()), &Type::list(Type::Int)).unwrap();
        assert_eq!(s.get(0), Some(&Type::Int));
    }

    #[test]
    fn occurs_check() {
        assert_eq!(unify(&a(), &Type::list(a())), Err(UnifyError::OccursCheck(0, Type::list(a()))));
    }

    #[test]
    fn mismatch() {
        assert!(matches!(unify(&Type::Int, &Type::Bool), Err(UnifyError::Mismatch(..))));
    }

    #[test]
    fn idempotent_unifier() {
        let t1 = Type::arrows([Type::Var(0), Type::Var(1)], Type::list(Type::Var(2)));
        let t2 = Type::arrows([Type::Var(1), Type::Int], Type::list(Type::Var(0)));
        let s = unify(&t1, &t2).unwrap();
        let once = t1.apply(&s);
        assert_eq!(once.apply(&s), once);
        assert_eq!(once, t2.apply(&s));
    }

    #[test]
    fn display() {
        let t = Type::arrows([Type::fun(Type::Var(0), Type::Var(1)), Type::list(Type::Var(0))], Type::list(Type::Var(1)));
        assert_eq!(t.to_string(), "(a -> b) -> [a] -> [b]");
    }
}
