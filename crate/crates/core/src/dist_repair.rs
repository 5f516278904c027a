//! Repairs, generalizations and specializations that minimize a distance.
//!
//! For edit distance the search is exact. At budget `d` it deletes up to `d`
//! atoms of `core(q)` and adds atoms over the remaining and fresh variables
//! while the budget lasts. Every node is measured with [`edit_dist_leq`], so
//! over-generation is harmless. Budgets grow from 0 until some candidate
//! conforms; all candidates at that budget are returned.

use std::collections::HashMap;
use std::ops::ControlFlow;

use num_rational::Ratio;

use crate::cores::core_example;
use crate::error::{Error, Result};
use crate::fitting::{
    all_fitting, fitting_exists_over, full_example, one_atom_extensions, relevant_schema,
};
use crate::hom::{contained, fits, hom_exists, Fitter, Target};
use crate::metrics::{distance, edit_dist, edit_dist_leq, Metric};
use crate::model::{conjoin_examples, product_all, Cq, DataExample, LabeledExampleSet, Name, Schema};
use crate::result::{dedup_equivalent, BoundedVerdict, Ranked, RepairResult};

/// Containment constraint relating a candidate `q′` to the input `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// No constraint.
    Repair,
    /// `q ⊆ q′`.
    Generalize,
    /// `q′ ⊆ q`.
    Specialize,
}

impl Mode {
    fn admits(self, q: &Cq, candidate: &Cq) -> Result<bool> {
        match self {
            Mode::Repair => Ok(true),
            Mode::Generalize => contained(q, candidate),
            Mode::Specialize => contained(candidate, q),
        }
    }
}

fn check_input(q: &Cq, e: &LabeledExampleSet) -> Result<()> {
    e.check_arity(q.arity())?;
    if q.has_repeated_head() {
        return Err(Error::RepeatedHeadVariables);
    }
    Ok(())
}

/// Visits every conforming fitting CQ within edit distance `d` of `q`
/// (duplicates possible).
fn within_budget(
    q: &Cq,
    e: &LabeledExampleSet,
    mode: Mode,
    d: usize,
    visit: &mut dyn FnMut(Cq) -> ControlFlow<()>,
) -> Result<()> {
    let relations: Vec<(Name, usize)> = relevant_schema(Some(q), e)?
        .iter()
        .map(|(r, a)| (r.clone(), a))
        .collect();
    let core = core_example(q.canonical_example());
    let fitter = Fitter::new(e);
    let eq = q.canonical_example();
    let tq = Target::new(eq);
    let mut search = Search {
        q,
        eq,
        tq: &tq,
        fitter: &fitter,
        relations: &relations,
        mode,
        d: d as u64,
        visited: HashMap::new(),
        visit,
        failure: None,
    };
    let facts = core.facts();
    let mut chosen = Vec::new();
    let flow = search.deletions(&core, facts.len(), 0, d, &mut chosen);
    if let Some(err) = search.failure {
        return Err(err);
    }
    let _ = flow;
    Ok(())
}

struct Search<'a> {
    q: &'a Cq,
    eq: &'a DataExample,
    tq: &'a Target<'a>,
    fitter: &'a Fitter<'a>,
    relations: &'a [(Name, usize)],
    mode: Mode,
    d: u64,
    /// Largest remaining budget each canonical body was expanded with.
    visited: HashMap<DataExample, usize>,
    visit: &'a mut dyn FnMut(Cq) -> ControlFlow<()>,
    failure: Option<Error>,
}

impl Search<'_> {
    fn deletions(
        &mut self,
        core: &DataExample,
        m: usize,
        start: usize,
        budget: usize,
        chosen: &mut Vec<usize>,
    ) -> ControlFlow<()> {
        let kept = core
            .facts()
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(_, f)| f.clone())
            .collect();
        let body = DataExample::new(
            crate::model::Instance::from_parts(core.instance().values().to_vec(), kept),
            core.tuple().to_vec(),
        );
        self.expand(crate::canon::canonical_form(&body), budget)?;
        if budget == 0 {
            return ControlFlow::Continue(());
        }
        for i in start..m {
            chosen.push(i);
            let flow = self.deletions(core, m, i + 1, budget - 1, chosen);
            chosen.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }

    /// Prune closed under adding atoms.
    fn promising(&self, body: &DataExample) -> bool {
        self.fitter.fits_positives(body) && (self.mode != Mode::Generalize || self.tq.admits(body))
    }

    fn expand(&mut self, body: DataExample, budget: usize) -> ControlFlow<()> {
        match self.visited.get(&body) {
            Some(&b) if b >= budget => return ControlFlow::Continue(()),
            _ => {}
        }
        self.visited.insert(body.clone(), budget);
        if !self.promising(&body) {
            return ControlFlow::Continue(());
        }
        self.check(&body)?;
        if budget == 0 {
            return ControlFlow::Continue(());
        }
        for next in one_atom_extensions(&body, self.relations) {
            self.expand(next, budget - 1)?;
        }
        ControlFlow::Continue(())
    }

    fn check(&mut self, body: &DataExample) -> ControlFlow<()> {
        if !body.is_safe() || !self.fitter.avoids_negatives(body) {
            return ControlFlow::Continue(());
        }
        if self.mode == Mode::Specialize && !hom_exists(self.eq, body) {
            return ControlFlow::Continue(());
        }
        let candidate = Cq::from_example(body.clone()).expect("safe body");
        match edit_dist_leq(self.q, &candidate, self.d) {
            Ok(true) => (self.visit)(candidate),
            Ok(false) => ControlFlow::Continue(()),
            Err(err) => {
                self.failure = Some(err);
                ControlFlow::Break(())
            }
        }
    }
}

/// A conforming fitting CQ within edit distance `d` of `q`, if any.
pub fn edit_bounded_fitting_mode(q: &Cq, e: &LabeledExampleSet, mode: Mode, d: usize) -> Result<Option<Cq>> {
    check_input(q, e)?;
    let mut hit = None;
    within_budget(q, e, mode, d, &mut |c| {
        hit = Some(c);
        ControlFlow::Break(())
    })?;
    Ok(hit)
}

/// A fitting CQ within edit distance `d` of `q`, if any.
pub fn edit_bounded_fitting(q: &Cq, e: &LabeledExampleSet, d: usize) -> Result<Option<Cq>> {
    edit_bounded_fitting_mode(q, e, Mode::Repair, d)
}

/// Budget past which no minimal candidate can lie: the core of `q` plus the
/// largest fitting body that can be relevant.
fn ceiling(q: &Cq, e: &LabeledExampleSet, schema: &Schema) -> Result<usize> {
    let core = core_example(q.canonical_example()).facts().len();
    if !e.positives().is_empty() {
        return Ok(core + product_all(e.positives())?.facts().len());
    }
    Ok(core + full_example(schema, q.arity()).facts().len())
}

/// All edit-distance-minimal conforming fitting CQs, up to equivalence,
/// each with its distance.
pub fn edit_repair_construct(q: &Cq, e: &LabeledExampleSet, mode: Mode) -> Result<RepairResult> {
    check_input(q, e)?;
    if !edit_repair_exists(q, e, mode)? {
        return Err(Error::NoFittingExists);
    }
    let schema = relevant_schema(Some(q), e)?;
    let top = ceiling(q, e, &schema)?;
    for d in 0..=top {
        let mut found = Vec::new();
        within_budget(q, e, mode, d, &mut |c| {
            found.push(c);
            ControlFlow::Continue(())
        })?;
        if !found.is_empty() {
            let queries = dedup_equivalent(found)
                .into_iter()
                .map(|query| Ranked {
                    query,
                    distance: Some(Ratio::from_integer(d as u64)),
                })
                .collect();
            return Ok(RepairResult::exact(queries));
        }
    }
    unreachable!("a conforming fitting CQ lies within distance {top}")
}

/// Exact: `candidate` fits, conforms to `mode`, and nothing conforming fits
/// strictly closer to `q`.
pub fn edit_repair_verify(q: &Cq, e: &LabeledExampleSet, candidate: &Cq, mode: Mode) -> Result<bool> {
    check_input(q, e)?;
    if candidate.has_repeated_head() {
        return Err(Error::RepeatedHeadVariables);
    }
    if !fits(candidate, e)?.fits || !mode.admits(q, candidate)? {
        return Ok(false);
    }
    let d = edit_dist(q, candidate)? as usize;
    if d == 0 {
        return Ok(true);
    }
    Ok(edit_bounded_fitting_mode(q, e, mode, d - 1)?.is_none())
}

/// Exact existence of a conforming fitting CQ.
pub fn edit_repair_exists(q: &Cq, e: &LabeledExampleSet, mode: Mode) -> Result<bool> {
    e.check_arity(q.arity())?;
    let schema = relevant_schema(Some(q), e)?;
    let eq = q.canonical_example();
    Ok(match mode {
        Mode::Repair => fitting_exists_over(&schema, e),
        Mode::Generalize => fitting_exists_over(&schema, &e.with_positive(eq.clone())),
        Mode::Specialize if !e.positives().is_empty() => {
            fitting_exists_over(&schema, e) && hom_exists(eq, &product_all(e.positives())?)
        }
        Mode::Specialize => {
            // q ∧ full is below every other specialization's image
            let most = conjoin_examples(eq, &full_example(&schema, q.arity()))?;
            !e.negatives().iter().any(|n| hom_exists(&most, n))
        }
    })
}

/// Distance-minimal fitting CQs of size at most `bound`, for any metric.
pub fn generic_dist_repair(metric: &Metric, q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<RepairResult> {
    e.check_arity(q.arity())?;
    if fits(q, e)?.fits {
        let mut r = RepairResult::exact(Vec::new());
        r.queries = dedup_equivalent(vec![q.clone()])
            .into_iter()
            .map(|query| Ranked {
                query,
                distance: Some(Ratio::from_integer(0)),
            })
            .collect();
        return Ok(r);
    }
    let schema = relevant_schema(Some(q), e)?;
    let mut best: Option<Ratio<u64>> = None;
    let mut kept = Vec::new();
    for c in dedup_equivalent(all_fitting(&schema, q.arity(), e, bound)) {
        let d = distance(metric, q, &c)?;
        match best {
            Some(b) if d > b => continue,
            Some(b) if d == b => kept.push(c),
            _ => {
                best = Some(d);
                kept = vec![c];
            }
        }
    }
    let queries: Vec<Ranked> = kept
        .into_iter()
        .map(|query| Ranked { query, distance: best })
        .collect();
    let n = queries.len();
    let mut out = RepairResult::bounded(queries, bound);
    if n > 1 {
        out.warnings.push(format!(
            "{n} candidates share the minimal distance; the pre-order does not single out a repair"
        ));
    }
    Ok(out)
}

/// Verification for any metric, bound-limited: `No` if a fitting candidate
/// of size at most `bound` is strictly closer.
pub fn generic_dist_verify(
    metric: &Metric,
    q: &Cq,
    e: &LabeledExampleSet,
    candidate: &Cq,
    bound: usize,
) -> Result<BoundedVerdict> {
    if !fits(candidate, e)?.fits {
        return Ok(BoundedVerdict::no(bound, None));
    }
    let d = distance(metric, q, candidate)?;
    let schema = relevant_schema(Some(q), e)?;
    for c in all_fitting(&schema, q.arity(), e, bound) {
        if distance(metric, q, &c)? < d {
            return Ok(BoundedVerdict::no(bound, Some(c)));
        }
    }
    Ok(BoundedVerdict::unknown(bound))
}
