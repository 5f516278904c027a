//! Semantic distances between CQs and the pre-orders they induce.
//!
//! All values are exact rationals. `edit_dist` is integral; `sdi_dist` and
//! `sdq_dist` are reciprocals of witness sizes; `mu_dist` is a probability.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::cores::core_example;
use crate::error::{Error, Result};
use crate::fitting::BodyEnumerator;
use crate::hom::{equivalent, hom_exists, member, Target};
use crate::model::{quotient, Cq, DataExample};

pub type Distance = Ratio<u64>;

/// A finite distribution over data examples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleDistribution {
    support: Vec<(DataExample, Ratio<u64>)>,
}

impl ExampleDistribution {
    /// Masses must be positive and sum to 1.
    pub fn new(support: Vec<(DataExample, Ratio<u64>)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = Ratio::zero();
        for (_, p) in &support {
            if p.is_zero() {
                return Err(Error::InvalidDistribution("zero probability mass".into()));
            }
            total += *p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        Ok(ExampleDistribution { support })
    }

    pub fn support(&self) -> &[(DataExample, Ratio<u64>)] {
        &self.support
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Metric {
    Edit,
    Sdi,
    Sdq,
    Mu(ExampleDistribution),
}

fn check_pair(q1: &Cq, q2: &Cq) -> Result<()> {
    if q1.arity() != q2.arity() {
        return Err(Error::ArityMismatch(format!(
            "queries of arity {} and {}",
            q1.arity(),
            q2.arity()
        )));
    }
    q1.schema().merge(&q2.schema())?;
    Ok(())
}

/// Branch-and-bound maximization of shared facts under an injective partial
/// renaming of the left core's variables into the right core's, with answer
/// variables matched position by position.
struct Overlap {
    facts: Vec<(usize, Vec<u32>)>,
    right: HashSet<(usize, Vec<u32>)>,
    right_per_rel: Vec<usize>,
    order: Vec<u32>,
    /// Facts whose last variable in `order` is at this step.
    decided_at: Vec<Vec<usize>>,
    candidates: Vec<u32>,
    map: Vec<Option<Option<u32>>>,
    used: Vec<bool>,
    matched_per_rel: Vec<usize>,
    best: usize,
}

impl Overlap {
    fn new(a: &DataExample, b: &DataExample) -> Overlap {
        let mut rels: Vec<&str> = a.facts().iter().chain(b.facts()).map(|f| &*f.relation).collect();
        rels.sort_unstable();
        rels.dedup();
        let rid = |r: &str| rels.binary_search(&r).expect("collected above");
        let facts: Vec<(usize, Vec<u32>)> = a.facts().iter().map(|f| (rid(&f.relation), f.args.clone())).collect();
        let right: HashSet<(usize, Vec<u32>)> =
            b.facts().iter().map(|f| (rid(&f.relation), f.args.clone())).collect();
        let mut right_per_rel = vec![0; rels.len()];
        for (r, _) in &right {
            right_per_rel[*r] += 1;
        }
        let mut map = vec![None; a.num_values()];
        let mut used = vec![false; b.num_values()];
        for (&x, &y) in a.tuple().iter().zip(b.tuple()) {
            map[x as usize] = Some(Some(y));
            used[y as usize] = true;
        }
        let mut degree = vec![0usize; a.num_values()];
        for (_, args) in &facts {
            for &v in args {
                degree[v as usize] += 1;
            }
        }
        let mut order: Vec<u32> = (0..a.num_values() as u32).filter(|&v| map[v as usize].is_none()).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(degree[v as usize]), v));
        let pos: HashMap<u32, usize> = order.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
        let mut decided_at = vec![Vec::new(); order.len() + 1];
        for (i, (_, args)) in facts.iter().enumerate() {
            let step = args.iter().map(|v| pos.get(v).copied().unwrap_or(0)).max().unwrap_or(0);
            decided_at[step].push(i);
        }
        let candidates = (0..b.num_values() as u32).filter(|&v| !used[v as usize]).collect();
        Overlap {
            facts,
            right,
            matched_per_rel: vec![0; right_per_rel.len()],
            right_per_rel,
            order,
            decided_at,
            candidates,
            map,
            used,
            best: 0,
        }
    }

    /// Shared facts among those decided at `step`; updates the match counts.
    fn decide(&mut self, step: usize) -> usize {
        let mut gained = 0;
        for &i in &self.decided_at[step] {
            let (r, args) = &self.facts[i];
            let image: Option<Vec<u32>> = args.iter().map(|&v| self.map[v as usize].flatten()).collect();
            if let Some(img) = image {
                if self.right.contains(&(*r, img)) {
                    self.matched_per_rel[*r] += 1;
                    gained += 1;
                }
            }
        }
        gained
    }

    fn undo(&mut self, step: usize) {
        for &i in &self.decided_at[step] {
            let (r, args) = &self.facts[i];
            let image: Option<Vec<u32>> = args.iter().map(|&v| self.map[v as usize].flatten()).collect();
            if let Some(img) = image {
                if self.right.contains(&(*r, img)) {
                    self.matched_per_rel[*r] -= 1;
                }
            }
        }
    }

    fn upper_bound(&self, step: usize, overlap: usize) -> usize {
        let mut pending = vec![0usize; self.right_per_rel.len()];
        for later in &self.decided_at[step + 1..] {
            for &i in later {
                let (r, args) = &self.facts[i];
                if !args.iter().any(|&v| self.map[v as usize] == Some(None)) {
                    pending[*r] += 1;
                }
            }
        }
        overlap
            + pending
                .iter()
                .enumerate()
                .map(|(r, &p)| p.min(self.right_per_rel[r] - self.matched_per_rel[r]))
                .sum::<usize>()
    }

    /// Raises `best` above its starting value if possible; stops once
    /// `goal` is reached.
    fn run(&mut self, goal: usize) {
        let base = self.decide(0);
        self.search(0, base, goal);
    }

    fn search(&mut self, step: usize, overlap: usize, goal: usize) -> bool {
        if overlap > self.best {
            self.best = overlap;
            if self.best >= goal {
                return true;
            }
        }
        if step == self.order.len() || self.upper_bound(step, overlap) <= self.best {
            return false;
        }
        let v = self.order[step] as usize;
        for ci in 0..=self.candidates.len() {
            let choice = match self.candidates.get(ci) {
                Some(&w) if self.used[w as usize] => continue,
                Some(&w) => Some(w),
                None => None,
            };
            self.map[v] = Some(choice);
            if let Some(w) = choice {
                self.used[w as usize] = true;
            }
            let gained = self.decide(step + 1);
            let done = self.search(step + 1, overlap + gained, goal);
            self.undo(step + 1);
            if let Some(w) = choice {
                self.used[w as usize] = false;
            }
            self.map[v] = None;
            if done {
                return true;
            }
        }
        false
    }
}

fn edit_cores(q1: &Cq, q2: &Cq) -> Result<(DataExample, DataExample)> {
    check_pair(q1, q2)?;
    if q1.has_repeated_head() || q2.has_repeated_head() {
        return Err(Error::RepeatedHeadVariables);
    }
    let a = core_example(q1.canonical_example());
    let b = core_example(q2.canonical_example());
    // branch over the side with fewer variables
    Ok(if a.num_values() <= b.num_values() { (a, b) } else { (b, a) })
}

/// Size of the symmetric difference of the cores, minimized over renamings
/// that fix the answer variables. Unmatched variables count as fresh.
pub fn edit_dist(q1: &Cq, q2: &Cq) -> Result<u64> {
    let (a, b) = edit_cores(q1, q2)?;
    let mut s = Overlap::new(&a, &b);
    s.run(usize::MAX);
    Ok((a.facts().len() + b.facts().len() - 2 * s.best) as u64)
}

/// `edit_dist(q1, q2) ≤ n`, stopping at the first good enough renaming.
pub fn edit_dist_leq(q1: &Cq, q2: &Cq, n: u64) -> Result<bool> {
    let (a, b) = edit_cores(q1, q2)?;
    let total = (a.facts().len() + b.facts().len()) as u64;
    if total <= n {
        return Ok(true);
    }
    if a.facts().len().abs_diff(b.facts().len()) as u64 > n {
        return Ok(false);
    }
    let goal = (total - n).div_ceil(2) as usize;
    let mut s = Overlap::new(&a, &b);
    s.best = goal - 1;
    s.run(goal);
    Ok(s.best >= goal)
}

/// Fewest facts in a quotient of `core(src)` that `other` does not map to.
fn smallest_separating_quotient(src: &DataExample, other: &DataExample) -> Option<usize> {
    let n = src.num_values();
    let mut best: Option<usize> = None;
    let mut classes = Vec::with_capacity(n);
    fn go(
        src: &DataExample,
        other: &DataExample,
        classes: &mut Vec<u32>,
        max: u32,
        best: &mut Option<usize>,
    ) {
        if classes.len() == src.num_values() {
            let q = quotient(src, classes);
            if best.is_some_and(|b| q.facts().len() >= b) {
                return;
            }
            if !hom_exists(other, &q) {
                *best = Some(q.facts().len());
            }
            return;
        }
        for c in 0..=max {
            classes.push(c);
            go(src, other, classes, if c == max { max + 1 } else { max }, best);
            classes.pop();
        }
    }
    go(src, other, &mut classes, 0, &mut best);
    best
}

/// `1/n` for the fewest facts `n` of an example on which exactly one query
/// holds; `0` for equivalent queries.
pub fn sdi_dist(q1: &Cq, q2: &Cq) -> Result<Distance> {
    check_pair(q1, q2)?;
    if equivalent(q1, q2)? {
        return Ok(Ratio::zero());
    }
    let c1 = core_example(q1.canonical_example());
    let c2 = core_example(q2.canonical_example());
    let n = [
        smallest_separating_quotient(&c1, &c2),
        smallest_separating_quotient(&c2, &c1),
    ]
    .into_iter()
    .flatten()
    .min()
    .expect("non-equivalent queries are separated by a quotient of a core");
    // the empty instance separates only when one query is the empty Boolean one
    Ok(Ratio::new(1, n.max(1) as u64))
}

/// `1/n` for the fewest atoms `n` of a CQ contained in exactly one of the
/// two; `0` for equivalent queries.
pub fn sdq_dist(q1: &Cq, q2: &Cq) -> Result<Distance> {
    check_pair(q1, q2)?;
    if equivalent(q1, q2)? {
        return Ok(Ratio::zero());
    }
    let c1 = core_example(q1.canonical_example());
    let c2 = core_example(q2.canonical_example());
    let (t1, t2) = (Target::new(&c1), Target::new(&c2));
    let prune = |b: &DataExample| t1.admits(b) || t2.admits(b);
    let schema = q1.schema().merge(&q2.schema())?;
    let bound = c1.facts().len().max(c2.facts().len());
    let mut size = None;
    BodyEnumerator::new(&schema, q1.arity())
        .max_size(bound)
        .prune(&prune)
        .for_each_cq(false, |r| {
            if t1.admits(r.canonical_example()) != t2.admits(r.canonical_example()) {
                size = Some(r.size());
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
    let n = size.expect("the larger core separates");
    Ok(Ratio::new(1, n as u64))
}

/// Probability mass of the examples on which the two queries disagree.
pub fn mu_dist(q1: &Cq, q2: &Cq, mu: &ExampleDistribution) -> Result<Distance> {
    check_pair(q1, q2)?;
    let mut total = Ratio::zero();
    for (e, p) in mu.support() {
        if member(e, q1)? != member(e, q2)? {
            total += *p;
        }
    }
    Ok(total)
}

pub fn distance(metric: &Metric, q1: &Cq, q2: &Cq) -> Result<Distance> {
    match metric {
        Metric::Edit => Ok(Ratio::from_integer(edit_dist(q1, q2)?)),
        Metric::Sdi => sdi_dist(q1, q2),
        Metric::Sdq => sdq_dist(q1, q2),
        Metric::Mu(mu) => mu_dist(q1, q2, mu),
    }
}

/// `q1` is at least as close to `q` as `q2` is.
pub fn dist_preorder_leq(metric: &Metric, q: &Cq, q1: &Cq, q2: &Cq) -> Result<bool> {
    Ok(distance(metric, q, q1)? <= distance(metric, q, q2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_cq, parse_example};

    fn cq(s: &str) -> Cq {
        parse_cq(s).unwrap()
    }

    fn diamond() -> (Cq, Cq) {
        (
            cq("q() :- R(x1,x2), R(x1,x3), R(x2,x4), R(x3,x4), A(x2), B(x3)."),
            cq("q() :- R(x1,x2), R(x1,x3), R(x2,x4), R(x3,x4), A(x2), B(x2)."),
        )
    }

    #[test]
    fn edit_distance_after_coring() {
        let (q1, q2) = diamond();
        assert_eq!(edit_dist(&q1, &q2).unwrap(), 4);
        assert!(edit_dist_leq(&q1, &q2, 4).unwrap());
        assert!(!edit_dist_leq(&q1, &q2, 3).unwrap());
        assert_eq!(edit_dist(&q1, &q1).unwrap(), 0);
        let p = cq("q(x) :- P(x).");
        assert_eq!(edit_dist(&p, &cq("q(x) :- P(x), R(y,z).")).unwrap(), 1);
        assert_eq!(edit_dist(&p, &cq("q(x) :- P(x), P(y).")).unwrap(), 0);
    }

    #[test]
    fn edit_distance_errors() {
        let p = cq("q(x) :- P(x).");
        assert_eq!(edit_dist(&cq("q(x,x) :- R(x,x)."), &cq("q(x,y) :- R(x,y).")), Err(Error::RepeatedHeadVariables));
        assert!(matches!(edit_dist(&p, &cq("q() :- P(x).")), Err(Error::ArityMismatch(_))));
    }

    #[test]
    fn edit_leq_matches_exact_on_small_pairs() {
        let qs = crate::fitting::enumerate_cqs(&crate::model::Schema::parse("R/2, P/1").unwrap(), 1, 2);
        for a in &qs {
            for b in &qs {
                let d = edit_dist(a, b).unwrap();
                for n in 0..=d + 1 {
                    assert_eq!(edit_dist_leq(a, b, n).unwrap(), d <= n, "{a} {b} {n}");
                }
            }
        }
    }

    #[test]
    fn loop_against_triangle() {
        let l = cq("q() :- R(x,x).");
        let k3 = cq("q() :- R(x,y), R(y,x), R(y,z), R(z,y), R(x,z), R(z,x).");
        assert_eq!(sdi_dist(&l, &k3).unwrap(), Ratio::new(1, 6));
        assert_eq!(sdi_dist(&l, &l).unwrap(), Ratio::zero());
        let p = cq("q(x) :- P(x).");
        assert_eq!(sdi_dist(&p, &cq("q(x) :- P(x), Q(x).")).unwrap(), Ratio::one());
    }

    #[test]
    fn query_distance() {
        let p = cq("q(x) :- P(x).");
        let q = cq("q(x) :- Q(x).");
        assert_eq!(sdq_dist(&p, &q).unwrap(), Ratio::one());
        assert_eq!(sdq_dist(&p, &p).unwrap(), Ratio::zero());
        let path = cq("q(x) :- R(x,y), R(y,z).");
        let edge = cq("q(x) :- R(x,y).");
        assert_eq!(sdq_dist(&path, &edge).unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn distribution_distance() {
        let e = |s: &str| parse_example(s).unwrap();
        let third = Ratio::new(1, 3);
        let mu = ExampleDistribution::new(vec![
            (e("R(a,b). R(b,a)."), third),
            (e("R(a,b). R(b,c). R(c,a)."), third),
            (e("R(a,a)."), third),
        ])
        .unwrap();
        let c2 = cq("q() :- R(x,y), R(y,x).");
        let c3 = cq("q() :- R(x,y), R(y,z), R(z,x).");
        // the 2-cycle holds on the 2-cycle and the loop, the 3-cycle on the 3-cycle and the loop
        assert_eq!(mu_dist(&c2, &c3, &mu).unwrap(), Ratio::new(2, 3));
        let edge = cq("q() :- R(x,y).");
        assert_eq!(mu_dist(&edge, &c3, &mu).unwrap(), Ratio::new(1, 3));
        assert_eq!(mu_dist(&c2, &c2, &mu).unwrap(), Ratio::zero());
        let point = ExampleDistribution::new(vec![(e("R(a,b). R(b,a)."), Ratio::one())]).unwrap();
        assert_eq!(mu_dist(&c2, &c3, &point).unwrap(), Ratio::one());
        assert!(matches!(
            ExampleDistribution::new(vec![(e("R(a,a)."), Ratio::new(1, 2))]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            ExampleDistribution::new(vec![(e("R(a,a)."), Ratio::one()), (e("R(a,b)."), Ratio::zero())]),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn preorder_from_edit_distance() {
        let q = cq("q() :- R(x,y), R(x,z), R(y,u), R(z,u), P(y), Q(z).");
        let q1 = cq("q() :- R(x,y), R(x,z), R(y,u), R(z,u), P(y), W(z).");
        let q2 = cq("q() :- R(x,y), R(x,z), R(y,u), R(z,u), P(y).");
        assert_eq!(edit_dist(&q, &q1).unwrap(), 2);
        assert_eq!(edit_dist(&q, &q2).unwrap(), 3);
        assert!(dist_preorder_leq(&Metric::Edit, &q, &q1, &q2).unwrap());
        assert!(!dist_preorder_leq(&Metric::Edit, &q, &q2, &q1).unwrap());
        assert!(dist_preorder_leq(&Metric::Edit, &q, &q1, &q1).unwrap());
    }
}
