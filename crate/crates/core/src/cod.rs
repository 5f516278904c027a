//! The containment-of-difference pre-order and the repairs it induces.
//!
//! `q1 ≼ q2` (relative to `q`) iff the answers on which `q1` disagrees with
//! `q` are among those on which `q2` does. Generalizations are exact and
//! unique; specializations and unconstrained repairs come from bounded
//! enumeration and carry the bound.

use std::ops::ControlFlow;

use crate::cores::core_example;
use crate::error::Result;
use crate::fitting::{most_specific_fitting, relevant_schema, BodyEnumerator};
use crate::hom::{contained, equivalent, fits, hom_exists, member, Fitter, Target};
use crate::model::{
    conjoin_examples, conjunction, direct_product, minimally_constrained_set, product_all, Cq, DataExample,
    LabeledExampleSet, Schema,
};
use crate::result::{dedup_equivalent, maximal, unranked, BoundedVerdict, RepairResult, Status};

/// `⟦q⟧ ⊕ ⟦q1⟧ ⊆ ⟦q⟧ ⊕ ⟦q2⟧`, decided by
/// `q ∧ q2 ⊆ q1` and (`q1 ⊆ q` or `q1 ⊆ q2`).
pub fn cod_leq(q: &Cq, q1: &Cq, q2: &Cq) -> Result<bool> {
    if !contained(&conjunction(q, q2)?, q1)? {
        return Ok(false);
    }
    Ok(contained(q1, q)? || contained(q1, q2)?)
}

/// The unique generalization: the most-specific fitting CQ once `e_q` is
/// added as a positive. `None` iff no fitting generalization exists.
pub fn cod_generalization_construct(q: &Cq, e: &LabeledExampleSet) -> Result<Option<Cq>> {
    e.check_arity(q.arity())?;
    most_specific_fitting(&e.with_positive(q.canonical_example().clone()))
}

pub fn cod_generalization_verify(q: &Cq, e: &LabeledExampleSet, candidate: &Cq) -> Result<bool> {
    match cod_generalization_construct(q, e)? {
        Some(g) => equivalent(&g, candidate),
        None => Ok(false),
    }
}

pub fn cod_generalization_exists(q: &Cq, e: &LabeledExampleSet) -> Result<bool> {
    Ok(cod_generalization_construct(q, e)?.is_some())
}

/// Cores of `q ∧ r` over bodies `r` of at most `bound` atoms that fit `e`,
/// reduced to the ⊆-maximal ones. Exact when `q` fails the positives (empty)
/// or fits `e` (`{q}`).
pub fn cod_specialization_construct(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<RepairResult> {
    e.check_arity(q.arity())?;
    specialize_over(&relevant_schema(Some(q), e)?, q, e, bound)
}

/// Specialization construction with bodies drawn from `schema`.
fn specialize_over(schema: &Schema, q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<RepairResult> {
    let fitter = Fitter::new(e);
    let eq = q.canonical_example();
    if !fitter.fits_positives(eq) {
        return Ok(RepairResult::exact(Vec::new()));
    }
    if fitter.avoids_negatives(eq) {
        return Ok(RepairResult::exact(unranked(dedup_equivalent(vec![q.clone()]))));
    }
    // Negatives outside q stay outside every specialization.
    let inside: Vec<DataExample> = e
        .negatives()
        .iter()
        .filter(|n| hom_exists(eq, n))
        .cloned()
        .collect();
    let inside = LabeledExampleSet::new(Vec::new(), inside)?;
    let blocker = Fitter::new(&inside);
    let prune = |b: &DataExample| fitter.fits_positives(b);
    let mut found = Vec::new();
    let mut failure = None;
    BodyEnumerator::new(schema, q.arity())
        .max_size(bound)
        .prune(&prune)
        .for_each(|r| {
            let c = match conjoin_examples(eq, r) {
                Ok(c) => c,
                Err(err) => {
                    failure = Some(err);
                    return ControlFlow::Break(());
                }
            };
            if blocker.avoids_negatives(&c) {
                found.push(Cq::from_example(core_example(&c)).expect("q is safe"));
            }
            ControlFlow::Continue(())
        });
    if let Some(err) = failure {
        return Err(err);
    }
    let mut out = RepairResult::bounded(unranked(maximal(&dedup_equivalent(found))), bound);
    out.warnings.push(bound_warning(bound));
    Ok(out)
}

fn bound_warning(bound: usize) -> String {
    format!("search cut at {bound} added atoms; larger candidates were not examined")
}

/// Is `candidate` a specialization of `q` for `e`? `No` is exact. `Yes` is
/// exact only when `q` itself fits. Otherwise a strictly more general
/// fitting `q ∧ r` above `candidate`, with `|r| ≤ bound`, refutes it.
pub fn cod_specialization_verify(
    q: &Cq,
    e: &LabeledExampleSet,
    candidate: &Cq,
    bound: usize,
) -> Result<BoundedVerdict> {
    if !fits(candidate, e)?.fits || !contained(candidate, q)? {
        return Ok(BoundedVerdict::no(bound, None));
    }
    let fitter = Fitter::new(e);
    let eq = q.canonical_example();
    if !fitter.fits_positives(eq) {
        return Ok(BoundedVerdict::no(bound, None));
    }
    if fitter.avoids_negatives(eq) {
        return Ok(BoundedVerdict::from_bool(equivalent(candidate, q)?, bound));
    }
    let tc = Target::new(candidate.canonical_example());
    let prune = |b: &DataExample| tc.admits(b) && fitter.fits_positives(b);
    let mut witness = None;
    let mut failure = None;
    BodyEnumerator::new(&candidate.schema(), q.arity())
        .max_size(bound)
        .prune(&prune)
        .for_each(|r| {
            let c = match conjoin_examples(eq, r) {
                Ok(c) => c,
                Err(err) => {
                    failure = Some(err);
                    return ControlFlow::Break(());
                }
            };
            if fitter.avoids_negatives(&c) && !hom_exists(candidate.canonical_example(), &c) {
                witness = Some(Cq::from_example(core_example(&c)).expect("q is safe"));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(match witness {
        Some(w) => BoundedVerdict::no(bound, Some(w)),
        None => BoundedVerdict::unknown(bound),
    })
}

/// Specialization existence. Exact `No` when `q` fails the positives and
/// exact `Yes` when `q` fits; otherwise `Unknown`, since every bounded
/// candidate may be beaten by a larger one.
pub fn cod_specialization_exists(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<BoundedVerdict> {
    e.check_arity(q.arity())?;
    let fitter = Fitter::new(e);
    let eq = q.canonical_example();
    if !fitter.fits_positives(eq) {
        return Ok(BoundedVerdict::no(bound, None));
    }
    if fitter.avoids_negatives(eq) {
        return Ok(BoundedVerdict::yes(bound));
    }
    Ok(BoundedVerdict::unknown(bound))
}

/// Weak most-generality of `q` for `e`, checked as: `q` is a specialization
/// of every minimally-constrained CQ above it.
pub fn wmg_as_specialization(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<BoundedVerdict> {
    if !fits(q, e)?.fits {
        return Ok(BoundedVerdict::no(bound, None));
    }
    let tops = if q.arity() == 0 {
        vec![Cq::empty_boolean()]
    } else {
        minimally_constrained_set(&relevant_schema(Some(q), e)?, q.arity())?
    };
    let mut all_yes = true;
    let mut any = false;
    for top in tops.iter().filter(|t| contained(q, t).unwrap_or(false)) {
        any = true;
        let v = cod_specialization_verify(top, e, q, bound)?;
        match v.status {
            Status::No => return Ok(v),
            Status::Unknown => all_yes = false,
            Status::Yes => {}
        }
    }
    Ok(if any && all_yes {
        BoundedVerdict::yes(bound)
    } else {
        BoundedVerdict::unknown(bound)
    })
}

/// Negatives multiplied by the product of the positives; `E−` itself when
/// there are no positives.
fn hat_negatives(e: &LabeledExampleSet) -> Result<LabeledExampleSet> {
    if e.positives().is_empty() {
        return Ok(e.only_negatives());
    }
    let p = product_all(e.positives())?;
    let hats = e
        .negatives()
        .iter()
        .map(|n| direct_product(n, &p))
        .collect::<Result<Vec<_>>>()?;
    LabeledExampleSet::new(Vec::new(), hats)
}

/// Repair test for positives only, assuming `candidate` fits them:
/// `q ≡ candidate` when `q` already fits, else
/// `Π(E+) × e_{q ∧ candidate} → e_candidate`.
fn positive_repair(q: &Cq, e: &LabeledExampleSet, candidate: &Cq, product: Option<&DataExample>) -> Result<bool> {
    let Some(p) = product else {
        return equivalent(q, candidate);
    };
    if e.positives().iter().all(|x| member(x, q).unwrap_or(false)) {
        return equivalent(q, candidate);
    }
    let qc = conjunction(q, candidate)?;
    Ok(hom_exists(&direct_product(p, qc.canonical_example())?, candidate.canonical_example()))
}

/// Repair verification. The positive branch is exact; the negative branch
/// goes through specialization verification and may be bound-limited.
pub fn cod_repair_verify(q: &Cq, e: &LabeledExampleSet, candidate: &Cq, bound: usize) -> Result<BoundedVerdict> {
    e.check_arity(q.arity())?;
    if !fits(candidate, e)?.fits {
        return Ok(BoundedVerdict::no(bound, None));
    }
    let product = if e.positives().is_empty() {
        None
    } else {
        Some(product_all(e.positives())?)
    };
    if positive_repair(q, e, candidate, product.as_ref())? {
        return Ok(BoundedVerdict::yes(bound));
    }
    cod_specialization_verify(q, &hat_negatives(e)?, candidate, bound)
}

/// Repairs up to `bound`: fitting CQs meeting the positive-branch condition,
/// plus specializations for the product-adjusted negatives that fit the
/// positives.
pub fn cod_repair_construct(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<RepairResult> {
    e.check_arity(q.arity())?;
    if fits(q, e)?.fits {
        return Ok(RepairResult::exact(unranked(dedup_equivalent(vec![q.clone()]))));
    }
    let mut found = Vec::new();
    if !e.positives().is_empty() {
        let product = product_all(e.positives())?;
        let fitter = Fitter::new(e);
        let prune = |b: &DataExample| fitter.fits_positives(b);
        let mut failure = None;
        BodyEnumerator::new(&relevant_schema(Some(q), e)?, q.arity())
            .max_size(bound)
            .prune(&prune)
            .for_each_cq(true, |c| {
                if !fitter.avoids_negatives(c.canonical_example()) {
                    return ControlFlow::Continue(());
                }
                match positive_repair(q, e, &c, Some(&product)) {
                    Ok(true) => found.push(c),
                    Ok(false) => {}
                    Err(err) => {
                        failure = Some(err);
                        return ControlFlow::Break(());
                    }
                }
                ControlFlow::Continue(())
            });
        if let Some(err) = failure {
            return Err(err);
        }
    }
    let hat = hat_negatives(e)?;
    let positives = e.only_positives();
    for r in specialize_over(&relevant_schema(Some(q), e)?, q, &hat, bound)?.queries {
        if fits(&r.query, &positives)?.fits {
            found.push(r.query);
        }
    }
    let mut out = RepairResult::bounded(unranked(dedup_equivalent(found)), bound);
    out.warnings
        .push("the repair set may be infinite; only candidates within the bound are listed".into());
    Ok(out)
}

/// Repair existence. `No` is exact (no fitting CQ at all); `Yes` needs a
/// candidate confirmed by the exact positive branch.
pub fn cod_repair_exists(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<BoundedVerdict> {
    e.check_arity(q.arity())?;
    let schema = relevant_schema(Some(q), e)?;
    if !crate::fitting::fitting_exists_over(&schema, e) {
        return Ok(BoundedVerdict::no(bound, None));
    }
    if fits(q, e)?.fits {
        return Ok(BoundedVerdict::yes(bound));
    }
    for r in cod_repair_construct(q, e, bound)?.queries {
        if cod_repair_verify(q, e, &r.query, bound)?.status == Status::Yes {
            return Ok(BoundedVerdict::yes(bound));
        }
    }
    Ok(BoundedVerdict::unknown(bound))
}

/// The generalization obtained through the repair machinery: the
/// most-specific fitting CQ for `e` plus `e_q`, confirmed as a repair for it.
pub fn cod_generalization_as_repair(q: &Cq, e: &LabeledExampleSet) -> Result<Option<Cq>> {
    e.check_arity(q.arity())?;
    let extended = e.with_positive(q.canonical_example().clone());
    let Some(candidate) = most_specific_fitting(&extended)? else {
        return Ok(None);
    };
    let v = cod_repair_verify(q, &extended, &candidate, 0)?;
    Ok((v.status == Status::Yes).then_some(candidate))
}
