use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::syntax::{is_hidden, Expr, Program};
use crate::types::TypeEnv;

/// A building block the synthesizer can place in a term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Production {
    /// A library or program function, or an operator by its symbol.
    Name(String),
    /// A reference to a local variable.
    Var,
    App,
    Lambda,
    Int,
    Bool,
    List,
    Tuple,
}

/// Costs of the three production classes when learning from models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub in_model: u32,
    pub library: u32,
    pub construct: u32,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { in_model: 1, library: 4, construct: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostModel {
    costs: BTreeMap<Production, u32>,
    name_default: u32,
    construct_default: u32,
}

impl CostModel {
    /// Every production costs 1.
    pub fn uniform() -> CostModel {
        CostModel { costs: BTreeMap::new(), name_default: 1, construct_default: 1 }
    }

    pub fn cost(&self, p: &Production) -> u32 {
        if let Some(c) = self.costs.get(p) {
            return *c;
        }
        match p {
            Production::Name(_) => self.name_default,
            _ => self.construct_default,
        }
    }

    /// Lower bound on the cost of any production.
    pub fn min_cost(&self) -> u32 {
        self.costs.values().copied().chain([self.name_default, self.construct_default]).min().unwrap_or(1).max(1)
    }
}

/// Productions used in `models` cost `in_model`; other library names cost
/// `library`, other constructs `construct`.
pub fn learn_cost_model(models: &[Program], library: &TypeEnv, weights: CostWeights) -> CostModel {
    let mut costs = BTreeMap::new();
    for m in models {
        m.walk(&mut |e| {
            if let Some(p) = production_of(e, library) {
                costs.insert(p, weights.in_model.max(1));
            }
        });
    }
    CostModel { costs, name_default: weights.library.max(1), construct_default: weights.construct.max(1) }
}

fn production_of(e: &Expr, library: &TypeEnv) -> Option<Production> {
    Some(match e {
        Expr::Var(n) if !is_hidden(n) && library.contains(n) => Production::Name(n.clone()),
        Expr::Var(_) => Production::Var,
        Expr::BinOp(op, ..) | Expr::OpRef(op) => Production::Name(op.symbol().to_string()),
        Expr::App(..) => Production::App,
        Expr::Lam(..) => Production::Lambda,
        Expr::Int(_) => Production::Int,
        Expr::Bool(_) => Production::Bool,
        Expr::List(_) => Production::List,
        Expr::Tuple(_) => Production::Tuple,
        Expr::Hole(_) | Expr::Range(..) | Expr::Case(..) | Expr::Let(..) => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prelude::prelude;
    use crate::syntax::parse_program;

    const MODEL: &str = "my_sort = foldr insert []
  where
    insert x [] = [x]
    insert x (y:ys) | x < y     = x:y:ys
                    | otherwise = y:insert x ys";

    #[test]
    fn model_names_are_cheap() {
        let cm = learn_cost_model(&[parse_program(MODEL).unwrap()], &prelude().types, CostWeights::default());
        assert_eq!(cm.cost(&Production::Name("insert".into())), 1);
        assert_eq!(cm.cost(&Production::Name("foldr".into())), 1);
        assert_eq!(cm.cost(&Production::Name(":".into())), 1);
        assert_eq!(cm.cost(&Production::Name("map".into())), 4);
        assert_eq!(cm.cost(&Production::List), 1);
        assert_eq!(cm.cost(&Production::Int), 2);
        assert_eq!(cm.min_cost(), 1);
    }

    #[test]
    fn union_over_models() {
        let a = parse_program("my_sort = foldr insert []").unwrap();
        let b = parse_program("my_sort xs = reverse (reverse xs)").unwrap();
        let cm = learn_cost_model(&[a, b], &prelude().types, CostWeights::default());
        assert_eq!(cm.cost(&Production::Name("reverse".into())), 1);
        assert_eq!(cm.cost(&Production::Name("insert".into())), 1);
    }

    #[test]
    fn uniform_costs() {
        let cm = CostModel::uniform();
        assert_eq!(cm.cost(&Production::Name("map".into())), 1);
        assert_eq!(cm.cost(&Production::Lambda), 1);
    }
}
