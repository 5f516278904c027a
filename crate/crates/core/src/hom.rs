//! Homomorphism search between data examples, and the query-level decisions
//! built on it: membership, evaluation, containment, equivalence, fitting.
//!
//! The search is a backtracking CSP over source values. Each source fact is
//! a constraint whose allowed tuples are the target facts of the same
//! relation; generalized arc consistency is maintained after every
//! assignment and the variable with the smallest domain is branched on.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Cq, DataExample, Instance, LabeledExampleSet, VarMapping};

/// Search options.
#[derive(Clone, Debug, Default)]
pub struct HomOptions {
    /// Target value that no source value may map to.
    pub avoid: Option<u32>,
    /// Abort with [`Error::Timeout`] once this instant has passed.
    pub deadline: Option<Instant>,
}

/// A preprocessed homomorphism target, reusable across many sources.
pub struct Target<'a> {
    example: &'a DataExample,
    n: usize,
    words: usize,
    by_rel: HashMap<&'a str, Vec<&'a [u32]>>,
}

impl<'a> Target<'a> {
    pub fn new(example: &'a DataExample) -> Self {
        let n = example.num_values();
        let mut by_rel: HashMap<&str, Vec<&[u32]>> = HashMap::new();
        for f in example.facts() {
            by_rel.entry(&*f.relation).or_default().push(&f.args);
        }
        Target {
            example,
            n,
            words: n.div_ceil(64),
            by_rel,
        }
    }

    pub fn example(&self) -> &DataExample {
        self.example
    }

    /// True iff `src → target` (tuples mapped position-wise).
    pub fn admits(&self, src: &DataExample) -> bool {
        self.find(src, &HomOptions::default())
            .expect("no deadline set")
            .is_some()
    }

    /// Complete search for a homomorphism `src → target`.
    pub fn find(&self, src: &DataExample, opts: &HomOptions) -> Result<Option<Vec<u32>>> {
        if src.arity() != self.example.arity() {
            return Ok(None);
        }
        let fixed: Vec<(u32, u32)> = src
            .tuple()
            .iter()
            .copied()
            .zip(self.example.tuple().iter().copied())
            .collect();
        let mut s = match Search::new(self, src, &fixed, opts) {
            Some(s) => s,
            None => return Ok(None),
        };
        let dom = std::mem::take(&mut s.root);
        s.solve(dom)
    }
}

struct Search<'t, 's> {
    src: &'s DataExample,
    words: usize,
    /// per source fact: allowed target tuples
    tuples: Vec<&'t [&'t [u32]]>,
    /// per source fact: pairs of positions holding the same variable
    repeats: Vec<Vec<(usize, usize)>>,
    facts_of: Vec<Vec<usize>>,
    root: Vec<u64>,
    deadline: Option<Instant>,
    steps: u64,
}

impl<'t, 's> Search<'t, 's> {
    /// Sets up the root domains; `None` when unsatisfiable immediately.
    fn new(
        t: &'t Target<'t>,
        src: &'s DataExample,
        fixed: &[(u32, u32)],
        opts: &HomOptions,
    ) -> Option<Self> {
        let n_src = src.num_values();
        let words = t.words;
        let mut tuples = Vec::with_capacity(src.facts().len());
        let mut repeats = Vec::with_capacity(src.facts().len());
        let mut facts_of = vec![Vec::new(); n_src];
        for (fi, f) in src.facts().iter().enumerate() {
            let ts: &[&[u32]] = match t.by_rel.get(&*f.relation) {
                Some(v) if v[0].len() == f.args.len() => v,
                _ => return None,
            };
            tuples.push(ts);
            let mut rep = Vec::new();
            for i in 0..f.args.len() {
                for j in i + 1..f.args.len() {
                    if f.args[i] == f.args[j] {
                        rep.push((i, j));
                    }
                }
            }
            repeats.push(rep);
            for &a in &f.args {
                if facts_of[a as usize].last() != Some(&fi) {
                    facts_of[a as usize].push(fi);
                }
            }
        }
        if n_src > 0 && t.n == 0 {
            return None;
        }
        let mut root = vec![0u64; n_src * words];
        for v in 0..n_src {
            let d = &mut root[v * words..(v + 1) * words];
            for i in 0..t.n {
                d[i / 64] |= 1 << (i % 64);
            }
            if let Some(a) = opts.avoid {
                if (a as usize) < t.n {
                    d[a as usize / 64] &= !(1 << (a % 64));
                }
            }
        }
        for &(s, d) in fixed {
            let dom = &mut root[s as usize * words..(s as usize + 1) * words];
            let has = dom[d as usize / 64] >> (d % 64) & 1 == 1;
            dom.iter_mut().for_each(|w| *w = 0);
            if !has {
                return None;
            }
            dom[d as usize / 64] |= 1 << (d % 64);
        }
        let mut s = Search {
            src,
            words,
            tuples,
            repeats,
            facts_of,
            root,
            deadline: opts.deadline,
            steps: 0,
        };
        let mut dom = std::mem::take(&mut s.root);
        let queue: Vec<usize> = (0..src.facts().len()).collect();
        if !s.propagate(&mut dom, queue) {
            return None;
        }
        s.root = dom;
        Some(s)
    }

    fn has(&self, dom: &[u64], v: u32, val: u32) -> bool {
        dom[v as usize * self.words + val as usize / 64] >> (val % 64) & 1 == 1
    }

    fn propagate(&self, dom: &mut [u64], mut queue: Vec<usize>) -> bool {
        let w = self.words;
        let mut queued = vec![false; self.src.facts().len()];
        for &f in &queue {
            queued[f] = true;
        }
        let mut support: Vec<u64> = Vec::new();
        while let Some(fi) = queue.pop() {
            queued[fi] = false;
            let f = &self.src.facts()[fi];
            let ar = f.args.len();
            support.clear();
            support.resize(ar * w, 0);
            for t in self.tuples[fi] {
                if !(0..ar).all(|i| self.has(dom, f.args[i], t[i])) {
                    continue;
                }
                if !self.repeats[fi].iter().all(|&(i, j)| t[i] == t[j]) {
                    continue;
                }
                for i in 0..ar {
                    support[i * w + t[i] as usize / 64] |= 1 << (t[i] % 64);
                }
            }
            for i in 0..ar {
                let v = f.args[i] as usize;
                let mut changed = false;
                let mut empty = true;
                for k in 0..w {
                    let old = dom[v * w + k];
                    let new = old & support[i * w + k];
                    if new != old {
                        changed = true;
                        dom[v * w + k] = new;
                    }
                    if new != 0 {
                        empty = false;
                    }
                }
                if empty {
                    return false;
                }
                if changed {
                    for &g in &self.facts_of[v] {
                        if g != fi && !queued[g] {
                            queued[g] = true;
                            queue.push(g);
                        }
                    }
                }
            }
        }
        true
    }

    fn size(&self, dom: &[u64], v: usize) -> u32 {
        dom[v * self.words..(v + 1) * self.words]
            .iter()
            .map(|w| w.count_ones())
            .sum()
    }

    fn solve(&mut self, dom: Vec<u64>) -> Result<Option<Vec<u32>>> {
        self.steps += 1;
        if self.steps % 1024 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(Error::Timeout);
                }
            }
        }
        let n_src = self.src.num_values();
        let mut pick = None;
        let mut best = (u32::MAX, 0usize);
        for v in 0..n_src {
            let s = self.size(&dom, v);
            if s > 1 {
                let key = (s, usize::MAX - self.facts_of[v].len());
                if key < best {
                    best = key;
                    pick = Some(v);
                }
            }
        }
        let Some(v) = pick else {
            let map = (0..n_src)
                .map(|v| {
                    let d = &dom[v * self.words..(v + 1) * self.words];
                    let k = d.iter().position(|&w| w != 0).expect("non-empty domain");
                    (k * 64) as u32 + d[k].trailing_zeros()
                })
                .collect();
            return Ok(Some(map));
        };
        let w = self.words;
        for k in 0..w {
            let mut bits = dom[v * w + k];
            while bits != 0 {
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                let mut next = dom.clone();
                next[v * w..(v + 1) * w].iter_mut().for_each(|x| *x = 0);
                next[v * w + k] = 1 << b;
                if self.propagate(&mut next, self.facts_of[v].clone()) {
                    if let Some(m) = self.solve(next)? {
                        return Ok(Some(m));
                    }
                }
            }
        }
        Ok(None)
    }
}

fn check_arity(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ArityMismatch(format!("arity {a} vs arity {b}")));
    }
    Ok(())
}

/// A homomorphism `src → dst` mapping the tuple of `src` onto that of `dst`.
pub fn find_homomorphism(src: &DataExample, dst: &DataExample) -> Result<Option<VarMapping>> {
    find_homomorphism_with(src, dst, &HomOptions::default())
}

pub fn find_homomorphism_with(
    src: &DataExample,
    dst: &DataExample,
    opts: &HomOptions,
) -> Result<Option<VarMapping>> {
    check_arity(src.arity(), dst.arity())?;
    Ok(Target::new(dst).find(src, opts)?.map(VarMapping::new))
}

/// `src → dst`; false on arity mismatch.
pub fn hom_exists(src: &DataExample, dst: &DataExample) -> bool {
    Target::new(dst).admits(src)
}

/// `e ∈ ⟦q⟧` iff `e_q → e`.
pub fn member(e: &DataExample, q: &Cq) -> Result<bool> {
    check_arity(e.arity(), q.arity())?;
    Ok(hom_exists(q.canonical_example(), e))
}

/// All answer tuples of `q` on `instance`, sorted by value names.
pub fn evaluate(q: &Cq, instance: &Instance) -> Result<Vec<Vec<String>>> {
    let schema = instance.schema();
    for (rel, arity) in q.schema().iter() {
        if let Some(a) = schema.arity(rel) {
            if a != arity {
                return Err(Error::SchemaMismatch(format!(
                    "relation `{rel}` has arity {a} in the instance and {arity} in the query"
                )));
            }
        }
    }
    let dst = DataExample::new(instance.clone(), Vec::new());
    let target = Target::new(&dst);
    let src = q.canonical_example();
    let mut heads: Vec<u32> = q.head().to_vec();
    heads.sort_unstable();
    heads.dedup();
    let mut out = Vec::new();
    let Some(mut search) = Search::new(&target, src, &[], &HomOptions::default()) else {
        return Ok(out);
    };
    let root = std::mem::take(&mut search.root);
    let mut assignment = vec![0u32; src.num_values()];
    enumerate_heads(&mut search, root, &heads, 0, &mut assignment, &mut |a| {
        let tuple = q
            .head()
            .iter()
            .map(|&h| instance.value_name(a[h as usize]).to_string())
            .collect();
        out.push(tuple);
    })?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn enumerate_heads(
    s: &mut Search<'_, '_>,
    dom: Vec<u64>,
    heads: &[u32],
    i: usize,
    assignment: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[u32]),
) -> Result<()> {
    if i == heads.len() {
        if s.solve(dom)?.is_some() {
            emit(assignment);
        }
        return Ok(());
    }
    let v = heads[i] as usize;
    let w = s.words;
    for k in 0..w {
        let mut bits = dom[v * w + k];
        while bits != 0 {
            let b = bits.trailing_zeros();
            bits &= bits - 1;
            let mut next = dom.clone();
            next[v * w..(v + 1) * w].iter_mut().for_each(|x| *x = 0);
            next[v * w + k] = 1 << b;
            if s.propagate(&mut next, s.facts_of[v].clone()) {
                assignment[v] = (k * 64) as u32 + b;
                enumerate_heads(s, next, heads, i + 1, assignment, emit)?;
            }
        }
    }
    Ok(())
}

/// `q1 ⊆ q2` iff `e_q2 → e_q1`.
pub fn contained(q1: &Cq, q2: &Cq) -> Result<bool> {
    check_arity(q1.arity(), q2.arity())?;
    Ok(hom_exists(q2.canonical_example(), q1.canonical_example()))
}

pub fn equivalent(q1: &Cq, q2: &Cq) -> Result<bool> {
    Ok(contained(q1, q2)? && contained(q2, q1)?)
}

/// Label of an example in a collection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

/// An example classified against its label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Index within the positives or negatives.
    pub index: usize,
    pub expected: Label,
    pub actual: Label,
}

/// Outcome of a fitting check; `fits` iff `violations` is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitReport {
    pub fits: bool,
    pub violations: Vec<Violation>,
}

pub fn fits(q: &Cq, e: &LabeledExampleSet) -> Result<FitReport> {
    e.check_arity(q.arity())?;
    let src = q.canonical_example();
    let mut violations = Vec::new();
    for (index, p) in e.positives().iter().enumerate() {
        if !hom_exists(src, p) {
            violations.push(Violation {
                index,
                expected: Label::Positive,
                actual: Label::Negative,
            });
        }
    }
    for (index, n) in e.negatives().iter().enumerate() {
        if hom_exists(src, n) {
            violations.push(Violation {
                index,
                expected: Label::Negative,
                actual: Label::Positive,
            });
        }
    }
    Ok(FitReport {
        fits: violations.is_empty(),
        violations,
    })
}

/// Reusable fitting checker with preprocessed targets.
pub(crate) struct Fitter<'a> {
    positives: Vec<Target<'a>>,
    negatives: Vec<Target<'a>>,
}

impl<'a> Fitter<'a> {
    pub(crate) fn new(e: &'a LabeledExampleSet) -> Self {
        Fitter {
            positives: e.positives().iter().map(Target::new).collect(),
            negatives: e.negatives().iter().map(Target::new).collect(),
        }
    }

    pub(crate) fn fits_positives(&self, body: &DataExample) -> bool {
        self.positives.iter().all(|t| t.admits(body))
    }

    pub(crate) fn avoids_negatives(&self, body: &DataExample) -> bool {
        !self.negatives.iter().any(|t| t.admits(body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_cq, parse_example, parse_instance};

    fn cycle(n: usize) -> DataExample {
        let mut b = Instance::builder();
        for i in 0..n {
            let a = format!("c{i}");
            let c = format!("c{}", (i + 1) % n);
            b.fact("R", &[&a, &c]).unwrap();
        }
        DataExample::new(b.build(), Vec::new())
    }

    /// All maps src → dst checked exhaustively.
    fn brute_hom(src: &DataExample, dst: &DataExample) -> bool {
        let n = src.num_values();
        let m = dst.num_values();
        let mut map = vec![0u32; n];
        loop {
            let ok_tuple = src
                .tuple()
                .iter()
                .zip(dst.tuple())
                .all(|(&a, &b)| map[a as usize] == b);
            let ok = ok_tuple
                && src.facts().iter().all(|f| {
                    dst.instance().contains_fact(&crate::model::Fact {
                        relation: f.relation.clone(),
                        args: f.args.iter().map(|&a| map[a as usize]).collect(),
                    })
                });
            if ok {
                return true;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return false;
                }
                map[i] += 1;
                if (map[i] as usize) < m {
                    break;
                }
                map[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn cycles() {
        assert!(!hom_exists(&cycle(4), &cycle(3)));
        assert!(!brute_hom(&cycle(4), &cycle(3)));
        assert!(hom_exists(&cycle(6), &cycle(3)));
        assert!(hom_exists(&cycle(3), &cycle(3)));
    }

    #[test]
    fn identity_is_found() {
        let e = parse_example("R(a,b). R(b,c). S(c,a).\ntuple: (a)").unwrap();
        let h = find_homomorphism(&e, &e).unwrap().unwrap();
        for f in e.facts() {
            let img = crate::model::Fact {
                relation: f.relation.clone(),
                args: f.args.iter().map(|&a| h.get(a)).collect(),
            };
            assert!(e.instance().contains_fact(&img));
        }
    }

    #[test]
    fn twelve_cycle_maps_into_four_cycle_only() {
        let q = parse_cq("q(x) :- R(x,y), R(y,z), R(z,u), R(u,x).").unwrap();
        let mut b = Instance::builder();
        for i in 0..12 {
            b.fact("R", &[&format!("c{i}"), &format!("c{}", (i + 1) % 12)]).unwrap();
        }
        let c12 = DataExample::with_tuple(b.build(), &["c0"]).unwrap();
        assert!(hom_exists(&c12, q.canonical_example()));
        assert!(!member(&c12, &q).unwrap());
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let q = parse_cq("q(x) :- P(x).").unwrap();
        let e = parse_example("P(a).").unwrap();
        assert!(matches!(member(&e, &q), Err(Error::ArityMismatch(_))));
    }

    #[test]
    fn evaluation_of_shipment_queries() {
        let i = parse_instance(
            "Ship(bolt, 2025, North).\nShip(bolt, 2025, South).\n\
             Ship(nut, 2025, North).\nShip(nut, 2024, South).\n\
             South(South). North(North).",
        )
        .unwrap();
        let q = parse_cq("q(x) :- Ship(x,y,f), South(f), Ship(x,y,d), North(d).").unwrap();
        assert_eq!(evaluate(&q, &i).unwrap(), vec![vec!["bolt".to_string()]]);
        let q2 = parse_cq("q(x) :- Ship(x,y,f), South(f), Ship(x,z,d), North(d).").unwrap();
        assert_eq!(evaluate(&q2, &i).unwrap().len(), 2);
    }

    #[test]
    fn boolean_query_on_empty_instance() {
        let q = parse_cq("q() :- R(x,y).").unwrap();
        assert!(evaluate(&q, &Instance::default()).unwrap().is_empty());
        let empty = Cq::empty_boolean();
        assert_eq!(evaluate(&empty, &Instance::default()).unwrap(), vec![Vec::<String>::new()]);
    }

    #[test]
    fn avoid_option_excludes_a_value() {
        let e = parse_example("R(a,b). R(b,b).").unwrap();
        let b = e.instance().value_index("b").unwrap();
        let a = e.instance().value_index("a").unwrap();
        let opts = HomOptions {
            avoid: Some(a),
            ..Default::default()
        };
        let h = find_homomorphism_with(&e, &e, &opts).unwrap().unwrap();
        assert_eq!(h.get(a), b);
    }

    #[test]
    fn fit_report_lists_violations() {
        let q = parse_cq("q(x) :- R(x,y), R(y,z), R(z,u), R(u,x).").unwrap();
        let pos = parse_example("R(a,b). R(b,c). R(c,a).\ntuple: (a)").unwrap();
        let e = LabeledExampleSet::new(vec![pos], vec![]).unwrap();
        let r = fits(&q, &e).unwrap();
        assert!(!r.fits);
        assert_eq!(r.violations.len(), 1);
        assert!(fits(&q, &LabeledExampleSet::empty()).unwrap().fits);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_example(max_vals: u32, max_facts: usize) -> impl Strategy<Value = DataExample> {
            (
                1..=max_vals,
                prop::collection::vec((0u8..3, 0u32..8, 0u32..8), 1..=max_facts),
            )
                .prop_map(move |(n, raw)| {
                    let mut b = Instance::builder();
                    for (r, x, y) in raw {
                        let (x, y) = (format!("v{}", x % n), format!("v{}", y % n));
                        match r {
                            0 => b.fact("R", &[&x, &y]).unwrap(),
                            1 => b.fact("S", &[&x, &y]).unwrap(),
                            _ => b.fact("P", &[&x]).unwrap(),
                        };
                    }
                    let i = b.build();
                    let t = i.facts()[0].args[0];
                    DataExample::new(i, vec![t])
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]

            #[test]
            fn agrees_with_exhaustive_search(
                a in small_example(4, 5),
                b in small_example(4, 6),
            ) {
                prop_assert_eq!(hom_exists(&a, &b), brute_hom(&a, &b));
            }

            #[test]
            fn witnesses_compose(
                a in small_example(3, 4),
                b in small_example(4, 5),
                c in small_example(4, 6),
            ) {
                if let (Some(h1), Some(h2)) = (
                    find_homomorphism(&a, &b).unwrap(),
                    find_homomorphism(&b, &c).unwrap(),
                ) {
                    let h = h1.then(&h2);
                    for f in a.facts() {
                        let img = crate::model::Fact {
                            relation: f.relation.clone(),
                            args: f.args.iter().map(|&v| h.get(v)).collect(),
                        };
                        prop_assert!(c.instance().contains_fact(&img));
                    }
                    prop_assert_eq!(h.get(a.tuple()[0]), c.tuple()[0]);
                }
            }
        }
    }
}
