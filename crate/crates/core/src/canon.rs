//! Canonical labeling of data examples by individualization-refinement.
//!
//! Two examples receive the same canonical form iff they are isomorphic by a
//! bijection that maps the distinguished tuple position-wise. The form is
//! used for deduplicating enumerations, isomorphism tests and deterministic
//! serialization.

use std::collections::BTreeMap;

use crate::model::{var_name, DataExample, Fact, Name};

type Certificate = (Vec<(u32, Vec<u32>)>, Vec<u32>);

struct Refiner<'a> {
    n: usize,
    rel_ids: Vec<u32>,
    facts: &'a [Fact],
    /// per value: (fact index, position)
    occurrences: Vec<Vec<(usize, usize)>>,
    tuple: &'a [u32],
}

impl<'a> Refiner<'a> {
    fn new(e: &'a DataExample) -> Self {
        let n = e.num_values();
        let rels: BTreeMap<&str, u32> = e
            .facts()
            .iter()
            .map(|f| &*f.relation)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, r)| (r, i as u32))
            .collect();
        let rel_ids = e.facts().iter().map(|f| rels[&*f.relation]).collect();
        let mut occurrences = vec![Vec::new(); n];
        for (fi, f) in e.facts().iter().enumerate() {
            for (p, &a) in f.args.iter().enumerate() {
                occurrences[a as usize].push((fi, p));
            }
        }
        Refiner {
            n,
            rel_ids,
            facts: e.facts(),
            occurrences,
            tuple: e.tuple(),
        }
    }

    fn initial_colors(&self) -> Vec<u32> {
        let mut keys: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (i, &v) in self.tuple.iter().enumerate() {
            keys[v as usize].push(i);
        }
        rank(&keys)
    }

    /// Refines to the coarsest equitable partition finer than `colors`.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let mut count = distinct(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(u32, usize, Vec<u32>)>)> = (0..self.n)
                .map(|v| {
                    let mut s: Vec<(u32, usize, Vec<u32>)> = self.occurrences[v]
                        .iter()
                        .map(|&(fi, p)| {
                            let f = &self.facts[fi];
                            (
                                self.rel_ids[fi],
                                p,
                                f.args.iter().map(|&a| colors[a as usize]).collect(),
                            )
                        })
                        .collect();
                    s.sort();
                    (colors[v], s)
                })
                .collect();
            colors = rank(&sigs);
            let c = distinct(&colors);
            if c == count {
                return colors;
            }
            count = c;
        }
    }

    fn certificate(&self, labels: &[u32]) -> Certificate {
        let mut facts: Vec<(u32, Vec<u32>)> = self
            .facts
            .iter()
            .zip(&self.rel_ids)
            .map(|(f, &r)| (r, f.args.iter().map(|&a| labels[a as usize]).collect()))
            .collect();
        facts.sort();
        let tuple = self.tuple.iter().map(|&a| labels[a as usize]).collect();
        (facts, tuple)
    }

    fn search(&self, colors: Vec<u32>, best: &mut Option<(Certificate, Vec<u32>)>) {
        let colors = self.refine(colors);
        if distinct(&colors) == self.n {
            let cert = self.certificate(&colors);
            if best.as_ref().map_or(true, |(b, _)| cert < *b) {
                *best = Some((cert, colors));
            }
            return;
        }
        // target cell: smallest color with more than one member
        let mut sizes = vec![0usize; self.n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = (0..self.n).find(|&c| sizes[c] > 1).expect("non-discrete") as u32;
        for v in 0..self.n {
            if colors[v] != target {
                continue;
            }
            let mut next: Vec<u32> = colors.iter().map(|&c| 2 * c + 1).collect();
            next[v] = 2 * target;
            self.search(next, best);
        }
    }
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("present") as u32)
        .collect()
}

/// Canonical labeling: a permutation old value index → new value index.
/// Values occurring neither in facts nor in the tuple must be compacted away
/// beforehand for the labeling to be an isomorphism invariant.
pub fn canonical_labeling(e: &DataExample) -> Vec<u32> {
    let r = Refiner::new(e);
    if r.n == 0 {
        return Vec::new();
    }
    let mut best = None;
    r.search(r.initial_colors(), &mut best);
    best.expect("at least one leaf").1
}

/// The canonical representative of the isomorphism class of `e`, with
/// values named `x, y, z, …` in canonical order.
pub fn canonical_form(e: &DataExample) -> DataExample {
    let e = e.compact();
    let labels = canonical_labeling(&e);
    let values = (0..e.num_values()).map(|i| Name::from(var_name(i))).collect();
    e.relabel(&labels, values)
}

/// Isomorphism preserving the distinguished tuple position-wise.
pub fn is_isomorphic(e1: &DataExample, e2: &DataExample) -> bool {
    e1.arity() == e2.arity()
        && e1.facts().len() == e2.facts().len()
        && canonical_form(e1) == canonical_form(e2)
}

/// Canonical form renamed for display: tuple values first by position, then
/// the remaining values by first occurrence in the sorted canonical facts.
pub(crate) fn display_form(e: &DataExample) -> DataExample {
    let c = canonical_form(e);
    let n = c.num_values();
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    fn push(v: u32, order: &mut Vec<u32>, seen: &mut [bool]) {
        if !seen[v as usize] {
            seen[v as usize] = true;
            order.push(v);
        }
    }
    for &v in c.tuple() {
        push(v, &mut order, &mut seen);
    }
    // Facts touching named values first, so paths read left to right.
    let mut left: Vec<&crate::model::Fact> = c.facts().iter().collect();
    while !left.is_empty() {
        let i = left
            .iter()
            .position(|f| f.args.iter().any(|&a| seen[a as usize]))
            .unwrap_or(0);
        for &a in &left.remove(i).args {
            push(a, &mut order, &mut seen);
        }
    }
    let mut map = vec![0u32; n];
    for (new, &old) in order.iter().enumerate() {
        map[old as usize] = new as u32;
    }
    let values = (0..n).map(|i| Name::from(var_name(i))).collect();
    c.relabel(&map, values)
}
