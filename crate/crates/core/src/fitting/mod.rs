//! Fitting existence, extremal fittings and bounded fitting search.

mod enumerate;

use std::ops::ControlFlow;

pub use enumerate::{enumerate_cqs, BodyEnumerator, HeadShape};
pub(crate) use enumerate::one_atom_extensions;

use crate::cores::core_cq;
use crate::error::{Error, Result};
use crate::hom::{fits, hom_exists, Fitter, Target};
use crate::model::{canonical_cq, product_all, Cq, DataExample, Fact, Instance, LabeledExampleSet, Name, Schema};
use crate::result::{dedup_equivalent, maximal, unranked, BoundedVerdict, RepairResult};

/// Relations occurring in the query or in the examples.
pub fn relevant_schema(q: Option<&Cq>, e: &LabeledExampleSet) -> Result<Schema> {
    let s = e.schema()?;
    match q {
        Some(q) => s.merge(&q.schema()),
        None => Ok(s),
    }
}

/// The most constrained body over `k` distinct answer variables: every fact
/// over them. For `k = 0`, one variable carrying every all-loop fact.
pub fn full_example(schema: &Schema, k: usize) -> DataExample {
    let n = k.max(1);
    let values: Vec<Name> = (0..n).map(|i| Name::from(crate::model::var_name(i))).collect();
    let mut facts = Vec::new();
    for (r, a) in schema.iter() {
        let mut idx = vec![0u32; a];
        loop {
            facts.push(Fact {
                relation: r.clone(),
                args: idx.clone(),
            });
            let mut i = 0;
            while i < a {
                idx[i] += 1;
                if (idx[i] as usize) < n {
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
    DataExample::new(Instance::from_parts(values, facts), (0..k as u32).collect())
}

/// True iff every CQ over `schema` maps into `e`.
fn is_full(e: &DataExample, schema: &Schema) -> bool {
    if e.arity() == 0 {
        if schema.is_empty() {
            return true;
        }
        return (0..e.num_values() as u32).any(|c| {
            schema.iter().all(|(r, a)| {
                e.instance().contains_fact(&Fact {
                    relation: r.clone(),
                    args: vec![c; a],
                })
            })
        });
    }
    hom_exists(&full_example(schema, e.arity()), e)
}

/// Exact fitting existence over the relations of `e`.
pub fn fitting_exists(e: &LabeledExampleSet) -> bool {
    fitting_exists_over(&e.schema().unwrap_or_default(), e)
}

/// Exact fitting existence for CQs over `schema`.
pub fn fitting_exists_over(schema: &Schema, e: &LabeledExampleSet) -> bool {
    if e.positives().is_empty() {
        return !e.negatives().iter().any(|n| is_full(n, schema));
    }
    let p = product_all(e.positives()).expect("non-empty, uniform arity");
    p.is_safe() && !e.negatives().iter().any(|n| hom_exists(&p, n))
}

/// The core of the canonical CQ of the product of the positives, when it
/// is safe and avoids the negatives.
pub fn most_specific_fitting(e: &LabeledExampleSet) -> Result<Option<Cq>> {
    if e.positives().is_empty() {
        return Err(Error::EmptyPositives);
    }
    let p = product_all(e.positives())?;
    if !p.is_safe() || e.negatives().iter().any(|n| hom_exists(&p, n)) {
        return Ok(None);
    }
    Ok(Some(core_cq(&canonical_cq(&p)?)))
}

/// Refutes weak most-generality by a strictly more general fitting CQ of
/// size at most `bound`. Never answers an exact yes.
pub fn wmg_fitting_verify(q: &Cq, e: &LabeledExampleSet, bound: usize) -> Result<BoundedVerdict> {
    if !fits(q, e)?.fits {
        return Ok(BoundedVerdict::no(bound, None));
    }
    let fitter = Fitter::new(e);
    let tq = Target::new(q.canonical_example());
    let prune = |b: &DataExample| tq.admits(b) && fitter.fits_positives(b);
    let mut witness = None;
    BodyEnumerator::new(&q.schema(), q.arity())
        .max_size(bound)
        .prune(&prune)
        .for_each_cq(true, |r| {
            if fitter.avoids_negatives(r.canonical_example())
                && !hom_exists(q.canonical_example(), r.canonical_example())
            {
                witness = Some(r);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
    Ok(match witness {
        Some(w) => BoundedVerdict::no(bound, Some(w)),
        None => BoundedVerdict::unknown(bound),
    })
}

/// Fitting CQs of size at most `bound`, deduplicated, that are ⊆-maximal
/// among those enumerated.
pub fn wmg_fitting_construct(e: &LabeledExampleSet, bound: usize) -> Result<RepairResult> {
    let Some(k) = e.arity() else {
        return Ok(RepairResult::bounded(Vec::new(), bound));
    };
    let schema = e.schema()?;
    let found = all_fitting(&schema, k, e, bound);
    Ok(RepairResult::bounded(unranked(maximal(&dedup_equivalent(found))), bound))
}

/// Every fitting CQ up to `bound` atoms (representatives up to isomorphism).
pub(crate) fn all_fitting(schema: &Schema, k: usize, e: &LabeledExampleSet, bound: usize) -> Vec<Cq> {
    let fitter = Fitter::new(e);
    let prune = |b: &DataExample| fitter.fits_positives(b);
    let mut found = Vec::new();
    BodyEnumerator::new(schema, k)
        .max_size(bound)
        .prune(&prune)
        .for_each_cq(true, |r| {
            if fitter.avoids_negatives(r.canonical_example()) {
                found.push(r);
            }
            ControlFlow::Continue(())
        });
    found
}

/// The first fitting CQ with at most `n` atoms in enumeration order.
pub fn bounded_size_fitting(
    schema: &Schema,
    k: usize,
    e: &LabeledExampleSet,
    n: usize,
) -> Result<Option<Cq>> {
    e.check_arity(k)?;
    let fitter = Fitter::new(e);
    let prune = |b: &DataExample| fitter.fits_positives(b);
    let mut hit = None;
    BodyEnumerator::new(schema, k)
        .max_size(n)
        .prune(&prune)
        .for_each_cq(true, |r| {
            if fitter.avoids_negatives(r.canonical_example()) {
                hit = Some(r);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
    Ok(hit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom::contained;
    use crate::model::{parse_cq, parse_example};
    use crate::result::Status;

    fn labeled(pos: &[&str], neg: &[&str]) -> LabeledExampleSet {
        LabeledExampleSet::new(
            pos.iter().map(|t| parse_example(t).unwrap()).collect(),
            neg.iter().map(|t| parse_example(t).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn existence_cases() {
        let c3 = labeled(&["R(a,b). R(b,c). R(c,a).\ntuple: (a)"], &[]);
        assert!(fitting_exists(&c3));
        let full = labeled(&[], &["R(a,a)."]);
        assert!(!fitting_exists(&full));
        let r = Schema::parse("R/2").unwrap();
        assert!(enumerate_cqs(&r, 0, 4)
            .iter()
            .all(|q| hom_exists(q.canonical_example(), &full.negatives()[0])));
        assert!(fitting_exists(&LabeledExampleSet::empty()));
        let unsafe_product = labeled(&["P(a). Q(b).\ntuple: (a)", "Q(c). P(d).\ntuple: (c)"], &[]);
        assert!(!fitting_exists(&unsafe_product));
        let contradictory = labeled(&["P(a).\ntuple: (a)"], &["P(a).\ntuple: (a)"]);
        assert!(!fitting_exists(&contradictory));
    }

    #[test]
    fn negative_only_unary() {
        // missing R(a,a) over the tuple value: R(x,x) fits
        let e = labeled(&[], &["R(a,b). R(b,a).\ntuple: (a)"]);
        assert!(fitting_exists(&e));
        let full = labeled(&[], &["R(a,a). R(a,b).\ntuple: (a)"]);
        assert!(!fitting_exists(&full));
    }

    #[test]
    fn most_specific_of_two_cycles() {
        let e = labeled(
            &["R(a,b). R(b,c). R(c,a).", "R(d,e). R(e,f). R(f,g). R(g,d)."],
            &[],
        );
        let m = most_specific_fitting(&e).unwrap().unwrap();
        assert_eq!(m.size(), 12);
        assert!(matches!(
            most_specific_fitting(&labeled(&[], &["R(a,a)."])),
            Err(Error::EmptyPositives)
        ));
    }

    #[test]
    fn most_specific_is_below_all_fittings() {
        let e = labeled(
            &["R(a,b). R(b,a). P(a).\ntuple: (a)", "R(c,c). P(c).\ntuple: (c)"],
            &["R(d,e).\ntuple: (d)"],
        );
        let m = most_specific_fitting(&e).unwrap().unwrap();
        assert!(fits(&m, &e).unwrap().fits);
        for q in all_fitting(&e.schema().unwrap(), 1, &e, 3) {
            assert!(contained(&m, &q).unwrap());
        }
    }

    #[test]
    fn bounded_search() {
        let e = labeled(
            &["R(a,b). R(b,c). R(c,d).\ntuple: (a)"],
            &["R(a,b). R(b,c).\ntuple: (a)"],
        );
        let s = Schema::parse("R/2").unwrap();
        let q = bounded_size_fitting(&s, 1, &e, 3).unwrap().unwrap();
        assert_eq!(q.to_string(), "q(x) :- R(x,y), R(y,z), R(z,u).");
        assert!(bounded_size_fitting(&s, 1, &e, 2).unwrap().is_none());
        let first = bounded_size_fitting(&s, 0, &LabeledExampleSet::empty(), 1).unwrap();
        assert_eq!(first.unwrap(), Cq::empty_boolean());
    }

    #[test]
    fn weakly_most_general_chain() {
        let e = labeled(
            &["R(a,a). P1(a). P2(a)."],
            &["R(a,a). R(b,b). R(a,b). P1(a). P2(b)."],
        );
        let q1 = parse_cq("q() :- P2(x), P1(x).").unwrap();
        let q2 = parse_cq("q() :- R(x1,x2), P2(x1), P1(x2).").unwrap();
        assert_eq!(wmg_fitting_verify(&q1, &e, 4).unwrap().status, Status::Unknown);
        assert_eq!(wmg_fitting_verify(&q2, &e, 4).unwrap().status, Status::Unknown);
        let not = parse_cq("q() :- P2(x), P1(x), R(x,y).").unwrap();
        let v = wmg_fitting_verify(&not, &e, 3).unwrap();
        assert_eq!(v.status, Status::No);
        assert!(v.witness.is_some());
        let bad = parse_cq("q() :- P1(x).").unwrap();
        assert_eq!(wmg_fitting_verify(&bad, &e, 3).unwrap().status, Status::No);

        let built = wmg_fitting_construct(&e, 3).unwrap();
        assert!(built.bound_limited);
        let texts: Vec<String> = built.cqs().iter().map(|q| q.to_string()).collect();
        assert!(texts.contains(&q1.to_string()), "{texts:?}");
        assert!(texts.contains(&core_cq(&q2).to_string()), "{texts:?}");
    }

    #[test]
    fn no_fitting_means_no_construction() {
        let e = labeled(&[], &["R(a,a)."]);
        assert!(wmg_fitting_construct(&e, 2).unwrap().is_empty());
    }
}
