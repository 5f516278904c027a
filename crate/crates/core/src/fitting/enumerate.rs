//! Enumeration of query bodies up to isomorphism, level by level in size.
//!
//! Level 0 holds the head patterns: one example per set partition of the
//! answer positions, with no facts. Level `s + 1` extends every body of
//! level `s` by one atom over its values plus fresh values, keeping one
//! canonical representative per isomorphism class. Every body of size
//! `s + 1` loses an atom to some body of size `s`, so levels are complete.
//!
//! A prune predicate must be closed under removing atoms: when it rejects a
//! body it must reject every extension.

use std::collections::HashSet;
use std::ops::ControlFlow;

use crate::canon::canonical_form;
use crate::model::{canonical_cq, Cq, DataExample, Fact, Instance, Name, Schema};

/// Which answer-variable patterns to start from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadShape {
    /// Every equality pattern among answer positions.
    Any,
    /// Pairwise distinct answer variables only.
    Distinct,
}

pub struct BodyEnumerator<'a> {
    relations: Vec<(Name, usize)>,
    k: usize,
    max_size: usize,
    heads: HeadShape,
    prune: Option<&'a dyn Fn(&DataExample) -> bool>,
}

/// Restricted growth strings of length `k`.
fn set_partitions(k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(k: usize, cur: &mut Vec<u32>, max: u32, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max {
            cur.push(c);
            go(k, cur, if c == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    go(k, &mut cur, 0, &mut out);
    out
}

impl<'a> BodyEnumerator<'a> {
    pub fn new(schema: &Schema, k: usize) -> Self {
        BodyEnumerator {
            relations: schema.iter().map(|(r, a)| (r.clone(), a)).collect(),
            k,
            max_size: 0,
            heads: HeadShape::Any,
            prune: None,
        }
    }

    pub fn max_size(mut self, n: usize) -> Self {
        self.max_size = n;
        self
    }

    pub fn heads(mut self, h: HeadShape) -> Self {
        self.heads = h;
        self
    }

    pub fn prune(mut self, p: &'a dyn Fn(&DataExample) -> bool) -> Self {
        self.prune = Some(p);
        self
    }

    fn keep(&self, e: &DataExample) -> bool {
        self.prune.map_or(true, |p| p(e))
    }

    fn level_zero(&self) -> Vec<DataExample> {
        let patterns = match self.heads {
            HeadShape::Any => set_partitions(self.k),
            HeadShape::Distinct => vec![(0..self.k as u32).collect()],
        };
        let mut out: Vec<DataExample> = patterns
            .into_iter()
            .map(|p| {
                let n = p.iter().max().map_or(0, |m| m + 1);
                let values = (0..n).map(|i| Name::from(format!("v{i}"))).collect();
                canonical_form(&DataExample::new(Instance::from_parts(values, Vec::new()), p))
            })
            .filter(|e| self.keep(e))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn extend(&self, body: &DataExample, seen: &mut HashSet<DataExample>, next: &mut Vec<DataExample>) {
        for c in one_atom_extensions(body, &self.relations) {
            if seen.insert(c.clone()) && self.keep(&c) {
                next.push(c);
            }
        }
    }

    /// Visits bodies of size `0..=max_size` in level order, each level
    /// sorted. Bodies may be unsafe.
    pub fn for_each(&self, mut visit: impl FnMut(&DataExample) -> ControlFlow<()>) {
        let mut level = self.level_zero();
        for size in 0..=self.max_size {
            for b in &level {
                if visit(b).is_break() {
                    return;
                }
            }
            if size == self.max_size {
                return;
            }
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for b in &level {
                self.extend(b, &mut seen, &mut next);
            }
            next.sort();
            level = next;
            if level.is_empty() {
                return;
            }
        }
    }

    /// Visits safe queries of size `1..=max_size` (and the empty Boolean
    /// query first when `include_empty` and `k = 0`).
    pub fn for_each_cq(
        &self,
        include_empty: bool,
        mut visit: impl FnMut(Cq) -> ControlFlow<()>,
    ) {
        self.for_each(|b| {
            if b.facts().is_empty() && !(include_empty && b.arity() == 0) {
                return ControlFlow::Continue(());
            }
            if !b.is_safe() {
                return ControlFlow::Continue(());
            }
            visit(canonical_cq(b).expect("safe body"))
        })
    }
}

/// Canonical forms of `body` plus one new atom over its values and fresh
/// values, one per isomorphism class.
pub(crate) fn one_atom_extensions(body: &DataExample, relations: &[(Name, usize)]) -> Vec<DataExample> {
    let n = body.num_values() as u32;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut args = Vec::new();
    for (rel, ar) in relations {
        extend_args(body, rel, *ar, n, 0, &mut args, &mut |c| {
            if seen.insert(c.clone()) {
                out.push(c);
            }
        });
    }
    out
}

fn extend_args(
    body: &DataExample,
    rel: &Name,
    ar: usize,
    n: u32,
    fresh: u32,
    args: &mut Vec<u32>,
    emit: &mut dyn FnMut(DataExample),
) {
    if args.len() == ar {
        let fact = Fact {
            relation: rel.clone(),
            args: args.clone(),
        };
        if fresh == 0 && body.instance().contains_fact(&fact) {
            return;
        }
        let mut values = body.instance().values().to_vec();
        for i in 0..fresh {
            values.push(Name::from(format!("f{i}")));
        }
        let mut facts = body.facts().to_vec();
        facts.push(fact);
        emit(canonical_form(&DataExample::new(
            Instance::from_parts(values, facts),
            body.tuple().to_vec(),
        )));
        return;
    }
    for v in 0..=n + fresh {
        args.push(v);
        let f = if v == n + fresh { fresh + 1 } else { fresh };
        extend_args(body, rel, ar, n, f, args, emit);
        args.pop();
    }
}

/// One representative per isomorphism class of safe CQs with
/// `1..=max_size` atoms, in nondecreasing size.
pub fn enumerate_cqs(schema: &Schema, k: usize, max_size: usize) -> Vec<Cq> {
    let mut out = Vec::new();
    BodyEnumerator::new(schema, k)
        .max_size(max_size)
        .for_each_cq(false, |q| {
            out.push(q);
            ControlFlow::Continue(())
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::is_isomorphic;

    fn schema(s: &str) -> Schema {
        Schema::parse(s).unwrap()
    }

    #[test]
    fn unary_single_atoms() {
        let b = enumerate_cqs(&schema("P/1"), 0, 1);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].to_string(), "q() :- P(x).");
        let u = enumerate_cqs(&schema("P/1"), 1, 1);
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].to_string(), "q(x) :- P(x).");
    }

    #[test]
    fn binary_boolean_to_two_atoms() {
        let qs = enumerate_cqs(&schema("R/2"), 0, 2);
        let texts: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
        // size 1: R(x,y), R(x,x); size 2 computed by hand:
        // loop+edge out, loop+edge in, loop+disjoint edge, two disjoint loops,
        // 2-cycle, path, fork out, fork in, two disjoint edges
        assert_eq!(qs.len(), 11, "{texts:#?}");
        assert!(texts.contains(&"q() :- R(x,y), R(y,x).".to_string()));
        assert!(texts.contains(&"q() :- R(x,y), R(y,z).".to_string()));
        for (i, a) in qs.iter().enumerate() {
            for b in &qs[i + 1..] {
                assert!(!is_isomorphic(a.canonical_example(), b.canonical_example()));
            }
        }
    }

    #[test]
    fn head_patterns() {
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(0).len(), 1);
        let qs = enumerate_cqs(&schema("R/2"), 2, 1);
        // heads (x,y): R(x,y), R(y,x); heads (x,x): R(x,x), R(x,y), R(y,x)
        assert_eq!(qs.len(), 5);
        let d: Vec<_> = {
            let mut v = Vec::new();
            BodyEnumerator::new(&schema("R/2"), 2)
                .max_size(1)
                .heads(HeadShape::Distinct)
                .for_each_cq(false, |q| {
                    v.push(q);
                    ControlFlow::Continue(())
                });
            v
        };
        assert_eq!(d.len(), 2);
    }

    /// Naive oracle: all atom sets over a fixed variable pool, canonized.
    fn naive(schema: &Schema, k: usize, max: usize) -> HashSet<DataExample> {
        let pool = (k + max * schema.max_arity()) as u32;
        let mut atoms = Vec::new();
        for (r, a) in schema.iter() {
            let mut idx = vec![0u32; a];
            loop {
                atoms.push(Fact {
                    relation: r.clone(),
                    args: idx.clone(),
                });
                let mut i = 0;
                loop {
                    if i == a {
                        break;
                    }
                    idx[i] += 1;
                    if idx[i] < pool {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == a {
                    break;
                }
            }
        }
        let mut out = HashSet::new();
        let values: Vec<Name> = (0..pool).map(|i| Name::from(format!("v{i}"))).collect();
        let mut chosen: Vec<usize> = Vec::new();
        fn go(
            start: usize,
            max: usize,
            atoms: &[Fact],
            chosen: &mut Vec<usize>,
            values: &[Name],
            k: usize,
            out: &mut HashSet<DataExample>,
        ) {
            if !chosen.is_empty() {
                let facts: Vec<Fact> = chosen.iter().map(|&i| atoms[i].clone()).collect();
                for head in set_partitions(k) {
                    let e = DataExample::new(Instance::from_parts(values.to_vec(), facts.clone()), head);
                    if e.is_safe() {
                        out.insert(canonical_form(&e));
                    }
                }
            }
            if chosen.len() == max {
                return;
            }
            for i in start..atoms.len() {
                chosen.push(i);
                go(i + 1, max, atoms, chosen, values, k, out);
                chosen.pop();
            }
        }
        go(0, max, &atoms, &mut chosen, &values, k, &mut out);
        out
    }

    #[test]
    fn agrees_with_naive_generation() {
        for (s, k, max) in [("R/2", 1, 2), ("P/1, R/2", 0, 2), ("R/2", 2, 2), ("P/1, Q/1", 1, 3)] {
            let s = schema(s);
            let got: HashSet<DataExample> = enumerate_cqs(&s, k, max)
                .iter()
                .map(|q| canonical_form(q.canonical_example()))
                .collect();
            assert_eq!(got.len(), enumerate_cqs(&s, k, max).len());
            assert_eq!(got, naive(&s, k, max), "schema {s} k={k} max={max}");
        }
    }
}
