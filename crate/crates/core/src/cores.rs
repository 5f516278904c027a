//! Homomorphism cores by iterated retraction.

use crate::canon::is_isomorphic;
use crate::hom::{HomOptions, Target};
use crate::model::{Cq, DataExample};

/// Endomorphism of `e` whose image avoids `v`, if any.
fn retraction_avoiding(e: &DataExample, v: u32) -> Option<Vec<u32>> {
    let opts = HomOptions {
        avoid: Some(v),
        deadline: None,
    };
    Target::new(e).find(e, &opts).expect("no deadline set")
}

/// The core of `e`: a hom-equivalent subinstance admitting no proper retract.
/// The distinguished tuple is kept. Values are tried in index order, so the
/// representative is deterministic.
pub fn core_example(e: &DataExample) -> DataExample {
    let mut cur = e.compact();
    'outer: loop {
        for v in 0..cur.num_values() as u32 {
            if cur.tuple().contains(&v) {
                continue;
            }
            if let Some(h) = retraction_avoiding(&cur, v) {
                cur = cur.image_under(&h);
                continue 'outer;
            }
        }
        return cur;
    }
}

/// True iff every endomorphism of `e` is surjective.
pub fn is_core(e: &DataExample) -> bool {
    let e = e.compact();
    (0..e.num_values() as u32)
        .filter(|v| !e.tuple().contains(v))
        .all(|v| retraction_avoiding(&e, v).is_none())
}

pub fn core_cq(q: &Cq) -> Cq {
    Cq::from_example(core_example(q.canonical_example()))
        .expect("retractions fix the answer variables")
}

/// Equivalence test through cores: `q1 ≡ q2` iff their cores are isomorphic.
pub fn cores_isomorphic(q1: &Cq, q2: &Cq) -> bool {
    is_isomorphic(
        &core_example(q1.canonical_example()),
        &core_example(q2.canonical_example()),
    )
}
