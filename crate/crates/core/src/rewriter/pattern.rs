//! Pattern matching over s-expressions.
//!
//! Pattern syntax:
//!
//! - `?name` binds exactly one element. A repeated `?name` must match a
//!   structurally equal element (non-linear patterns).
//! - `?name*` binds a segment of zero or more consecutive list elements and
//!   may appear anywhere inside a list, any number of times. Candidate
//!   segment lengths are tried shortest-first, so the first reported match
//!   is deterministic.
//! - Anything else matches literally.
//!
//! Targets are instantiated by substituting `?name` bindings and splicing
//! `?name*` bindings into the enclosing list.

use std::collections::BTreeMap;

use super::sexpr::Sexpr;

/// Bindings produced by a successful match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    single: BTreeMap<String, Sexpr>,
    segment: BTreeMap<String, Vec<Sexpr>>,
}

impl Bindings {
    pub fn get(&self, name: &str) -> Option<&Sexpr> {
        self.single.get(name)
    }

    pub fn get_segment(&self, name: &str) -> Option<&[Sexpr]> {
        self.segment.get(name).map(|v| v.as_slice())
    }
}

fn single_var(pat: &Sexpr) -> Option<&str> {
    let atom = pat.as_atom()?;
    if atom.starts_with('?') && !atom.ends_with('*') {
        Some(&atom[1..])
    } else {
        None
    }
}

fn segment_var(pat: &Sexpr) -> Option<&str> {
    let atom = pat.as_atom()?;
    if atom.starts_with('?') && atom.ends_with('*') {
        Some(&atom[1..atom.len() - 1])
    } else {
        None
    }
}

/// All matches of `pattern` against `value`, in deterministic order.
pub fn match_all(pattern: &Sexpr, value: &Sexpr) -> Vec<Bindings> {
    let mut out = Vec::new();
    let mut bindings = Bindings::default();
    match_one(pattern, value, &mut bindings, &mut out);
    out
}

/// First match, if any.
pub fn match_first(pattern: &Sexpr, value: &Sexpr) -> Option<Bindings> {
    match_all(pattern, value).into_iter().next()
}

fn match_one(pattern: &Sexpr, value: &Sexpr, bindings: &mut Bindings, out: &mut Vec<Bindings>) {
    if let Some(name) = single_var(pattern) {
        match bindings.single.get(name) {
            Some(bound) if bound != value => {}
            Some(_) => out.push(bindings.clone()),
            None => {
                bindings.single.insert(name.to_string(), value.clone());
                out.push(bindings.clone());
                bindings.single.remove(name);
            }
        }
        return;
    }
    match (pattern, value) {
        (Sexpr::Atom(p), Sexpr::Atom(v)) => {
            if p == v {
                out.push(bindings.clone());
            }
        }
        (Sexpr::List(pats), Sexpr::List(vals)) => {
            match_list(pats, vals, bindings, out);
        }
        _ => {}
    }
}

/// Match a pattern list against a value list with backtracking over segment
/// lengths. Collects every complete assignment into `out`.
fn match_list(pats: &[Sexpr], vals: &[Sexpr], bindings: &mut Bindings, out: &mut Vec<Bindings>) {
    let Some((first, rest_pats)) = pats.split_first() else {
        if vals.is_empty() {
            out.push(bindings.clone());
        }
        return;
    };

    if let Some(name) = segment_var(first) {
        if let Some(bound) = bindings.segment.get(name).cloned() {
            // Already-bound segment must literally prefix the values.
            if vals.len() >= bound.len() && vals[..bound.len()] == bound[..] {
                match_list(rest_pats, &vals[bound.len()..], bindings, out);
            }
            return;
        }
        for take in 0..=vals.len() {
            bindings
                .segment
                .insert(name.to_string(), vals[..take].to_vec());
            match_list(rest_pats, &vals[take..], bindings, out);
            bindings.segment.remove(name);
        }
        return;
    }

    let Some((v_first, v_rest)) = vals.split_first() else {
        return;
    };
    // Matches of the head element each continue into the tail.
    let mut head_matches = Vec::new();
    match_one(first, v_first, bindings, &mut head_matches);
    for m in head_matches {
        let mut b = m;
        match_list(rest_pats, v_rest, &mut b, out);
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unbound pattern variable `?{0}` in target")]
pub struct UnboundVar(pub String);

/// Instantiate a target template under bindings.
pub fn instantiate(target: &Sexpr, bindings: &Bindings) -> Result<Sexpr, UnboundVar> {
    if let Some(name) = single_var(target) {
        return bindings
            .get(name)
            .cloned()
            .ok_or_else(|| UnboundVar(name.to_string()));
    }
    match target {
        Sexpr::Atom(_) => Ok(target.clone()),
        Sexpr::List(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                if let Some(name) = segment_var(item) {
                    let seg = bindings
                        .get_segment(name)
                        .ok_or_else(|| UnboundVar(format!("{name}*")))?;
                    out.extend_from_slice(seg);
                } else {
                    out.push(instantiate(item, bindings)?);
                }
            }
            Ok(Sexpr::List(out))
        }
    }
}

/// Variables referenced by a pattern: (single names, segment names).
pub fn pattern_vars(pattern: &Sexpr) -> (Vec<String>, Vec<String>) {
    let mut singles = Vec::new();
    let mut segments = Vec::new();
    collect_vars(pattern, &mut singles, &mut segments);
    singles.sort();
    singles.dedup();
    segments.sort();
    segments.dedup();
    (singles, segments)
}

fn collect_vars(pattern: &Sexpr, singles: &mut Vec<String>, segments: &mut Vec<String>) {
    if let Some(name) = segment_var(pattern) {
        segments.push(name.to_string());
        return;
    }
    if let Some(name) = single_var(pattern) {
        singles.push(name.to_string());
        return;
    }
    if let Sexpr::List(items) = pattern {
        for item in items {
            collect_vars(item, singles, segments);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewriter::sexpr::parse_sexpr;

    fn p(s: &str) -> Sexpr {
        parse_sexpr(s).unwrap()
    }

    #[test]
    fn literal_and_single_wildcards() {
        let b = match_first(&p("(cmp = ?a ?b)"), &p("(cmp = (col t.a) (int 5))")).unwrap();
        assert_eq!(b.get("a").unwrap(), &p("(col t.a)"));
        assert_eq!(b.get("b").unwrap(), &p("(int 5)"));
        assert!(match_first(&p("(cmp < ?a ?b)"), &p("(cmp = x y)")).is_none());
    }

    #[test]
    fn nonlinear_repeated_variable() {
        // (and ?p ?p): both occurrences must be equal.
        assert!(match_first(&p("(and ?p ?p)"), &p("(and x x)")).is_some());
        assert!(match_first(&p("(and ?p ?p)"), &p("(and x y)")).is_none());
    }

    #[test]
    fn segment_wildcards_find_duplicate_pairs() {
        let pattern = p("(where ?pre* ?p ?mid* ?p ?post*)");
        let value = p("(where a b c b d)");
        let b = match_first(&pattern, &value).unwrap();
        // Shortest-first segments: first duplicate pair is (b, b).
        assert_eq!(b.get("p").unwrap(), &p("b"));
        assert_eq!(b.get_segment("pre").unwrap(), &[p("a")]);
        assert_eq!(b.get_segment("mid").unwrap(), &[p("c")]);
        assert_eq!(b.get_segment("post").unwrap(), &[p("d")]);

        assert!(match_first(&pattern, &p("(where a b c)")).is_none());
    }

    #[test]
    fn instantiation_splices_segments() {
        let pattern = p("(where ?pre* ?p ?mid* ?p ?post*)");
        let target = p("(where ?pre* ?p ?mid* ?post*)");
        let value = p("(where a b c b d)");
        let b = match_first(&pattern, &value).unwrap();
        assert_eq!(instantiate(&target, &b).unwrap(), p("(where a b c d)"));
    }

    #[test]
    fn unbound_target_variable_errors() {
        let b = match_first(&p("?x"), &p("a")).unwrap();
        assert!(instantiate(&p("(f ?y)"), &b).is_err());
    }

    #[test]
    fn match_all_is_ordered_and_exhaustive() {
        let pattern = p("(l ?pre* ?x ?post*)");
        let all = match_all(&pattern, &p("(l a b)"));
        // Shortest-prefix first: x=a then x=b.
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].get("x").unwrap(), &p("a"));
        assert_eq!(all[1].get("x").unwrap(), &p("b"));
    }
}
