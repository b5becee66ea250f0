use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::exercise::Exercise;
use crate::check::{CheckOutcome, Checker, ConstraintSet, LocalExample};
use crate::eval::{Filling, ModelRunner, Runner, Value};
use crate::syntax::{is_hidden, Expr, HoleId, Program};

/// Examples shown per hole.
pub const SPEC_EXAMPLES: usize = 5;
/// Below this many local examples, more are harvested from the filled program.
const SPARSE: usize = 3;

/// Input-output examples for one hole, taken from a verified filling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HoleSpec {
    pub hole: HoleId,
    pub examples: Vec<String>,
    #[serde(skip)]
    pub filling: Expr,
}

/// Describes what each hole has to do, as examples the filling satisfies.
/// `constraints` are the local examples from checking `p` unfilled.
pub fn hole_specs(ex: &Exercise, p: &Program, filling: &Filling, constraints: &ConstraintSet, fuel: u64) -> Vec<HoleSpec> {
    let model = ModelRunner::new(&ex.models[0], &ex.entry, fuel);
    let heads = helper_heads(p);
    let mut out = Vec::new();
    for h in p.hole_ids() {
        let Some(fill) = filling.get(&h) else { continue };
        let mut locals: Vec<LocalExample> = constraints.locals.get(&h).cloned().unwrap_or_default();
        if distinct_calls(&locals) < SPARSE {
            let others: Filling = filling.iter().filter(|(k, _)| **k != h).map(|(k, v)| (*k, v.clone())).collect();
            let checker = Checker { model: Some(&model), fillings: Some(&others), fuel, ..Checker::new(p, &ex.entry) };
            if let CheckOutcome::Constraints(more) = checker.check_all(&ex.examples) {
                locals.extend(more.locals.get(&h).cloned().unwrap_or_default());
            }
        }
        let runner = Runner { fillings: Some(filling), fuel, ..Runner::direct(p, &ex.entry) };
        let used: BTreeSet<String> = fill.free_vars().into_iter().collect();
        let head = heads.get(&h);
        let mut shown: BTreeSet<(usize, String)> = BTreeSet::new();
        for l in &locals {
            let Ok(r) = runner.run_local(fill, &l.env, &l.args, &l.input) else { continue };
            if r.to_value().as_ref() != Some(&l.output) {
                continue;
            }
            let size = l.args.iter().chain(l.env.iter().map(|(_, v)| v)).map(Value::size).sum::<usize>();
            shown.insert((size, render(h, head, l, &used)));
        }
        let mut examples: Vec<String> = Vec::new();
        for (_, s) in shown {
            if !examples.contains(&s) {
                examples.push(s);
            }
            if examples.len() == SPEC_EXAMPLES {
                break;
            }
        }
        out.push(HoleSpec { hole: h, examples, filling: fill.clone() });
    }
    out
}

fn distinct_calls(locals: &[LocalExample]) -> usize {
    locals.iter().map(|l| (&l.env, &l.args)).collect::<BTreeSet<_>>().len()
}

/// `f 2 [1,3] == [1,2,3]` when the hole is the whole body of `f`, else
/// `?0 2 == 2 given x = 1` naming only the variables the filling uses.
fn render(h: HoleId, head: Option<&(String, Vec<String>)>, l: &LocalExample, used: &BTreeSet<String>) -> String {
    let lookup = |n: &str| l.env.iter().rev().find(|(m, _)| m == n).map(|(_, v)| v);
    let mut parts = Vec::new();
    let mut params: &[String] = &[];
    match head {
        Some((name, ps)) if ps.iter().all(|n| lookup(n).is_some()) => {
            parts.push(name.clone());
            parts.extend(ps.iter().filter_map(|n| lookup(n)).map(Value::atom));
            params = ps;
        }
        _ => parts.push(format!("?{h}")),
    }
    parts.extend(l.args.iter().map(Value::atom));
    let mut s = format!("{} == {}", parts.join(" "), l.output);
    let mut seen = BTreeSet::new();
    let given: Vec<String> = l
        .env
        .iter()
        .rev()
        .filter(|(n, _)| used.contains(n) && !params.contains(n) && seen.insert(n.clone()))
        .map(|(n, v)| format!("{n} = {v}"))
        .collect();
    if !given.is_empty() {
        s.push_str(" given ");
        s.push_str(&given.iter().rev().cloned().collect::<Vec<_>>().join(", "));
    }
    s
}

/// Holes that make up the whole body of a named function, with the
/// function's name and parameters.
fn helper_heads(p: &Program) -> BTreeMap<HoleId, (String, Vec<String>)> {
    fn visit(name: &str, body: &Expr, out: &mut BTreeMap<HoleId, (String, Vec<String>)>) {
        let mut params = Vec::new();
        let mut cur = body;
        while let Expr::Lam(x, b) = cur {
            if is_hidden(x) {
                return;
            }
            params.push(x.clone());
            cur = b;
        }
        if let Expr::Hole(h) = cur {
            if !params.is_empty() {
                out.insert(*h, (name.to_string(), params));
            }
        }
    }
    let mut out = BTreeMap::new();
    for b in &p.bindings {
        visit(&b.name, &b.body, &mut out);
    }
    p.walk(&mut |e| match e {
        Expr::Let(bs, _) => bs.iter().for_each(|b| visit(&b.name, &b.body, &mut out)),
        Expr::Case(_, alts) => alts.iter().flat_map(|a| &a.wheres).for_each(|b| visit(&b.name, &b.body, &mut out)),
        _ => {}
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{live_eval, PartialResult};
    use crate::syntax::{parse_expr, parse_program};

    fn constraints(ex: &Exercise, p: &Program) -> ConstraintSet {
        let model = ModelRunner::new(&ex.models[0], &ex.entry, 100_000);
        match (Checker { model: Some(&model), ..Checker::new(p, &ex.entry) }).check_all(&ex.examples) {
            CheckOutcome::Constraints(cs) => cs,
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn where_helper_examples_follow_insert() {
        let ex = Exercise::bundled();
        let p = parse_program("my_sort [] = []\nmy_sort (x:xs) = f x (my_sort xs)\n  where f y ys = ?").unwrap();
        let filling: Filling = [(0, parse_expr("insert y ys").unwrap())].into_iter().collect();
        let specs = hole_specs(&ex, &p, &filling, &constraints(&ex, &p), 100_000);
        assert_eq!(specs.len(), 1);
        assert!(!specs[0].examples.is_empty() && specs[0].examples.len() <= SPEC_EXAMPLES);
        for s in &specs[0].examples {
            let (call, out) = s.split_once(" == ").unwrap();
            assert!(call.starts_with("f "), "{s}");
            let e = parse_expr(&call.replacen('f', "insert", 1)).unwrap();
            let got = live_eval(&Program::default(), &e, 10_000).unwrap();
            assert_eq!(got.to_string(), out, "{s}");
        }
    }

    #[test]
    fn fold_holes_get_two_specs() {
        let ex = Exercise::bundled();
        let p = parse_program("my_sort [] = []\nmy_sort (x:xs) = foldr ? ? xs").unwrap();
        let filling: Filling =
            [(0, parse_expr("insert").unwrap()), (1, parse_expr("[x]").unwrap())].into_iter().collect();
        let specs = hole_specs(&ex, &p, &filling, &constraints(&ex, &p), 100_000);
        assert_eq!(specs.len(), 2);
        assert!(specs[0].examples.iter().all(|s| s.starts_with("?0 ")));
        assert!(specs[1].examples.len() >= 3);
        for s in &specs[1].examples {
            let (lhs, rhs) = s.split_once(" given x = ").unwrap();
            assert_eq!(lhs, format!("?1 == [{rhs}]"));
        }
    }

    #[test]
    fn hole_free_program_has_no_specs() {
        let ex = Exercise::bundled();
        let p = ex.models[0].clone();
        assert!(hole_specs(&ex, &p, &Filling::new(), &ConstraintSet::default(), 100_000).is_empty());
        assert!(matches!(live_eval(&p, &parse_expr("my_sort [1]").unwrap(), 1000), Ok(PartialResult::Cons(..))));
    }
}
