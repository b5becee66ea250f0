use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{is_hidden, Expr, HoleId, Program};

/// Address of a node: the top-level binding index followed by child indices
/// (see [`Expr::children`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn binding(index: usize) -> Path {
        Path(vec![index])
    }

    pub fn child(&self, i: usize) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts_with(&self, prefix: &Path) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "/{}", parts.join("/"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path {0} does not address a node")]
    InvalidPath(Path),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HoleInfo {
    pub id: HoleId,
    pub path: Path,
    /// Lambda- and pattern-bound names in scope, outermost first.
    pub context: Vec<String>,
}

pub fn node_at<'a>(p: &'a Program, path: &Path) -> Option<&'a Expr> {
    let (first, rest) = path.0.split_first()?;
    let mut cur = &p.bindings.get(*first)?.body;
    for &i in rest {
        cur = cur.children().into_iter().nth(i)?;
    }
    Some(cur)
}

pub fn node_at_mut<'a>(p: &'a mut Program, path: &Path) -> Option<&'a mut Expr> {
    let (first, rest) = path.0.split_first()?;
    let mut cur = &mut p.bindings.get_mut(*first)?.body;
    for &i in rest {
        cur = cur.children_mut().into_iter().nth(i)?;
    }
    Some(cur)
}

/// Path of the parent node, or `None` for a binding root.
pub fn parent_path(path: &Path) -> Option<Path> {
    if path.len() <= 1 {
        None
    } else {
        Some(Path(path.0[..path.len() - 1].to_vec()))
    }
}

/// Every node path in pre-order.
pub fn enumerate_paths(p: &Program) -> Vec<Path> {
    fn go(e: &Expr, path: &mut Vec<usize>, out: &mut Vec<Path>) {
        out.push(Path(path.clone()));
        for (i, c) in e.children().into_iter().enumerate() {
            path.push(i);
            go(c, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    for (i, b) in p.bindings.iter().enumerate() {
        go(&b.body, &mut vec![i], &mut out);
    }
    out
}

/// Names each child of `e` adds to the scope, by child index.
fn child_binders(e: &Expr) -> Vec<Vec<String>> {
    let visible = |names: Vec<&str>| -> Vec<String> {
        names.into_iter().filter(|n| !is_hidden(n)).map(String::from).collect()
    };
    match e {
        Expr::Lam(p, _) => vec![visible(vec![p])],
        Expr::Case(_, alts) => {
            let mut out = vec![vec![]];
            for alt in alts {
                let names = visible(alt.pat.binders());
                let n = match &alt.rhs {
                    super::ast::Rhs::Plain(_) => 1,
                    super::ast::Rhs::Guarded(gs) => gs.len() * 2,
                } + alt.wheres.len();
                out.extend(std::iter::repeat_n(names, n));
            }
            out
        }
        _ => vec![vec![]; e.children().len()],
    }
}

pub fn holes(p: &Program) -> Vec<HoleInfo> {
    fn go(e: &Expr, path: &mut Vec<usize>, scope: &mut Vec<String>, out: &mut Vec<HoleInfo>) {
        if let Expr::Hole(id) = e {
            let mut context: Vec<String> = Vec::new();
            for n in scope.iter() {
                if let Some(pos) = context.iter().position(|c| c == n) {
                    context.remove(pos);
                }
                context.push(n.clone());
            }
            out.push(HoleInfo { id: *id, path: Path(path.clone()), context });
            return;
        }
        let binders = child_binders(e);
        for (i, c) in e.children().into_iter().enumerate() {
            let added = binders.get(i).cloned().unwrap_or_default();
            let n = added.len();
            scope.extend(added);
            path.push(i);
            go(c, path, scope, out);
            path.pop();
            scope.truncate(scope.len() - n);
        }
    }
    let mut out = Vec::new();
    for (i, b) in p.bindings.iter().enumerate() {
        go(&b.body, &mut vec![i], &mut Vec::new(), &mut out);
    }
    out
}

/// Replaces the node at `path` with `e`. Holes in `e` keep their ids unless
/// the id is already used elsewhere, in which case they get the smallest
/// free id.
pub fn replace_at(p: &Program, path: &Path, e: Expr) -> Result<Program, PathError> {
    let mut out = p.clone();
    let slot = node_at_mut(&mut out, path).ok_or_else(|| PathError::InvalidPath(path.clone()))?;
    *slot = Expr::Hole(HoleId::MAX);
    let mut used: BTreeSet<HoleId> = out.hole_ids().into_iter().filter(|&id| id != HoleId::MAX).collect();
    let mut e = e;
    e.walk_mut(&mut |n| {
        if let Expr::Hole(id) = n {
            if !used.insert(*id) || *id == HoleId::MAX {
                let fresh = (0..).find(|k| !used.contains(k)).unwrap_or(0);
                used.insert(fresh);
                *id = fresh;
            }
        }
    });
    if let Some(slot) = node_at_mut(&mut out, path) {
        *slot = e;
    }
    Ok(out)
}

/// Number of non-hole nodes.
pub fn node_count(p: &Program) -> usize {
    let mut n = 0;
    p.walk(&mut |e| {
        if !e.is_hole() {
            n += 1;
        }
    });
    n
}
