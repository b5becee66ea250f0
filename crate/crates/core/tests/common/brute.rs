//! Exhaustive enumeration of small well-typed terms over a fixed vocabulary.
//! Depth 1 terms are variables and constants; an application has depth one
//! more than its deepest argument. Lambdas do not add depth.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use tutor_core::syntax::{is_hidden, Expr, HoleId, Op, Program};
use tutor_core::types::Type;

fn int() -> Type {
    Type::Int
}

fn ints() -> Type {
    Type::list(Type::Int)
}

fn fun(args: &[Type], res: Type) -> Type {
    Type::arrows(args.iter().cloned(), res)
}

/// Names and constants the enumerator combines, with monomorphic types.
pub fn vocabulary(entry: Option<(&str, Type)>) -> Vec<(Expr, Type)> {
    let pair = Type::Tuple(vec![int(), int()]);
    let mut v = vec![
        (Expr::Int(0), int()),
        (Expr::Int(1), int()),
        (Expr::List(vec![]), ints()),
        (Expr::Bool(true), Type::Bool),
        (Expr::Bool(false), Type::Bool),
        (Expr::OpRef(Op::Cons), fun(&[int(), ints()], ints())),
        (Expr::var("insert"), fun(&[int(), ints()], ints())),
        (Expr::OpRef(Op::Append), fun(&[ints(), ints()], ints())),
        (Expr::OpRef(Op::Add), fun(&[int(), int()], int())),
        (Expr::OpRef(Op::Sub), fun(&[int(), int()], int())),
        (Expr::var("max"), fun(&[int(), int()], int())),
        (Expr::var("min"), fun(&[int(), int()], int())),
        (Expr::OpRef(Op::Lt), fun(&[int(), int()], Type::Bool)),
        (Expr::var("reverse"), fun(&[ints()], ints())),
        (Expr::var("head"), fun(&[ints()], int())),
        (Expr::var("fst"), fun(&[pair.clone()], int())),
        (Expr::var("snd"), fun(&[pair], int())),
    ];
    if let Some((name, ty)) = entry {
        v.push((Expr::var(name), ty));
    }
    v
}

type Ctx = Vec<(String, Type)>;

pub struct Enumerator {
    vocab: Vec<(Expr, Type)>,
    memo: HashMap<(Type, Ctx, usize), Rc<Vec<Expr>>>,
}

impl Enumerator {
    pub fn new(vocab: Vec<(Expr, Type)>) -> Enumerator {
        Enumerator { vocab, memo: HashMap::new() }
    }

    /// All terms of type `ty` up to `depth` with the first-order visible
    /// variables of `ctx` in scope.
    pub fn terms(&mut self, ty: &Type, ctx: &[(String, Type)], depth: usize) -> Rc<Vec<Expr>> {
        let ctx: Ctx = ctx.iter().filter(|(n, t)| !is_hidden(n) && !t.is_function()).cloned().collect();
        self.go(ty, &ctx, depth)
    }

    fn go(&mut self, ty: &Type, ctx: &Ctx, depth: usize) -> Rc<Vec<Expr>> {
        let key = (ty.clone(), ctx.clone(), depth);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let mut out = Vec::new();
        if depth > 0 {
            let heads: Vec<(Expr, Type)> =
                ctx.iter().map(|(n, t)| (Expr::var(n.clone()), t.clone())).chain(self.vocab.iter().cloned()).collect();
            for (head, hty) in &heads {
                let (args, _) = hty.uncurry();
                let args: Vec<Type> = args.into_iter().cloned().collect();
                for k in 0..=args.len() {
                    if k > 0 && depth < 2 {
                        break;
                    }
                    if result_after(hty, k) != ty {
                        continue;
                    }
                    let mut partial = vec![head.clone()];
                    for a in &args[..k] {
                        let choices = self.go(a, ctx, depth - 1);
                        partial = partial
                            .iter()
                            .flat_map(|f| choices.iter().map(move |x| Expr::app(f.clone(), x.clone())))
                            .collect();
                    }
                    out.extend(partial);
                }
            }
            if let Type::Fun(a, b) = ty {
                let name = format!("v{}", ctx.len());
                let mut inner = ctx.clone();
                inner.push((name.clone(), (**a).clone()));
                let bodies = if a.is_function() { self.go(b, ctx, depth) } else { self.go(b, &inner, depth) };
                out.extend(bodies.iter().map(|body| Expr::lam(name.clone(), body.clone())));
            }
        }
        let r = Rc::new(out);
        self.memo.insert(key, r.clone());
        r
    }
}

fn result_after(ty: &Type, k: usize) -> &Type {
    let mut t = ty;
    for _ in 0..k {
        match t {
            Type::Fun(_, r) => t = r,
            _ => unreachable!("arity checked by caller"),
        }
    }
    t
}

/// Every combination of one candidate per hole.
pub fn fillings(per_hole: &[(HoleId, Rc<Vec<Expr>>)]) -> Vec<BTreeMap<HoleId, Expr>> {
    let mut out = vec![BTreeMap::new()];
    for (h, cands) in per_hole {
        out = out
            .iter()
            .flat_map(|m| {
                cands.iter().map(move |c| {
                    let mut m = m.clone();
                    m.insert(*h, c.clone());
                    m
                })
            })
            .collect();
    }
    out
}

/// `p` with its holes replaced.
pub fn fill(p: &Program, filling: &BTreeMap<HoleId, Expr>) -> Program {
    let mut q = p.clone();
    for b in &mut q.bindings {
        fill_expr(&mut b.body, filling);
    }
    q
}

fn fill_expr(e: &mut Expr, filling: &BTreeMap<HoleId, Expr>) {
    if let Expr::Hole(h) = e {
        if let Some(f) = filling.get(h) {
            *e = f.clone();
        }
        return;
    }
    for c in e.children_mut() {
        fill_expr(c, filling);
    }
}
