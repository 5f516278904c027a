//! Structural constructions on queries and examples.

use std::collections::{BTreeSet, HashMap};

use super::{Cq, DataExample, Fact, Instance, LabeledExampleSet, Name, Schema, VarMapping};
use crate::canon::{canonical_form, display_form};
use crate::error::{Error, Result};

pub fn canonical_example(q: &Cq) -> DataExample {
    q.canonical_example().clone()
}

/// The query whose canonical example is `e`, with canonical variable names.
pub fn canonical_cq(e: &DataExample) -> Result<Cq> {
    let q = Cq::from_example(e.clone())?;
    Cq::from_example(display_form(q.canonical_example()))
}

fn find(parent: &mut [u32], v: u32) -> u32 {
    let mut r = v;
    while parent[r as usize] != r {
        r = parent[r as usize];
    }
    let mut v = v;
    while parent[v as usize] != r {
        let next = parent[v as usize];
        parent[v as usize] = r;
        v = next;
    }
    r
}

/// Collapses values by class ids (`classes[v]` is any representative key).
/// Each class is named after its smallest member.
pub fn quotient(e: &DataExample, classes: &[u32]) -> DataExample {
    assert_eq!(classes.len(), e.num_values());
    let mut ids: HashMap<u32, u32> = HashMap::new();
    let mut values = Vec::new();
    let mut map = Vec::with_capacity(classes.len());
    for (v, &c) in classes.iter().enumerate() {
        let id = *ids.entry(c).or_insert_with(|| {
            values.push(e.instance().values()[v].clone());
            values.len() as u32 - 1
        });
        map.push(id);
    }
    e.relabel(&map, values).compact()
}

/// Conjunction: bodies renamed apart and answer variables identified
/// position by position, closed under transitivity.
pub fn conjunction(q1: &Cq, q2: &Cq) -> Result<Cq> {
    Cq::from_example(conjoin_examples(q1.canonical_example(), q2.canonical_example())?)
        .and_then(|q| canonical_cq(q.canonical_example()))
}

/// Conjunction on raw examples (either side may be unsafe).
pub(crate) fn conjoin_examples(e1: &DataExample, e2: &DataExample) -> Result<DataExample> {
    if e1.arity() != e2.arity() {
        return Err(Error::ArityMismatch(format!(
            "conjunction of arity {} and {}",
            e1.arity(),
            e2.arity()
        )));
    }
    let n1 = e1.num_values() as u32;
    let n = n1 as usize + e2.num_values();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for (&a, &b) in e1.tuple().iter().zip(e2.tuple()) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b + n1));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi as usize] = lo;
        }
    }
    let mut values: Vec<Name> = Vec::with_capacity(n);
    for v in e1.instance().values() {
        values.push(Name::from(format!("{v}₁")));
    }
    for v in e2.instance().values() {
        values.push(Name::from(format!("{v}₂")));
    }
    let mut facts: Vec<Fact> = e1.facts().to_vec();
    facts.extend(e2.facts().iter().map(|f| Fact {
        relation: f.relation.clone(),
        args: f.args.iter().map(|&a| a + n1).collect(),
    }));
    let joined = DataExample::new(
        Instance::from_parts(values, facts),
        e1.tuple().to_vec(),
    );
    let classes: Vec<u32> = (0..n as u32).map(|v| find(&mut parent, v)).collect();
    Ok(quotient(&joined, &classes))
}

/// Components of a product value, for flattened naming.
struct ProductValues {
    parts: Vec<Vec<Name>>,
}

fn product_raw(
    a: &DataExample,
    a_parts: &ProductValues,
    b: &DataExample,
    b_parts: &ProductValues,
) -> (DataExample, ProductValues) {
    let nb = b.num_values() as u64;
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut parts: Vec<Vec<Name>> = Vec::new();
    let mut intern = |x: u32, y: u32, parts: &mut Vec<Vec<Name>>| -> u32 {
        let key = x as u64 * nb + y as u64;
        *index.entry(key).or_insert_with(|| {
            let mut p = a_parts.parts[x as usize].clone();
            p.extend(b_parts.parts[y as usize].iter().cloned());
            parts.push(p);
            parts.len() as u32 - 1
        })
    };
    let tuple: Vec<u32> = a
        .tuple()
        .iter()
        .zip(b.tuple())
        .map(|(&x, &y)| intern(x, y, &mut parts))
        .collect();
    let mut by_rel: HashMap<&str, Vec<&Fact>> = HashMap::new();
    for f in b.facts() {
        by_rel.entry(&f.relation).or_default().push(f);
    }
    let mut facts = Vec::new();
    for f in a.facts() {
        let Some(gs) = by_rel.get(&*f.relation) else {
            continue;
        };
        for g in gs {
            if g.args.len() != f.args.len() {
                continue;
            }
            let args = f
                .args
                .iter()
                .zip(&g.args)
                .map(|(&x, &y)| intern(x, y, &mut parts))
                .collect();
            facts.push(Fact {
                relation: f.relation.clone(),
                args,
            });
        }
    }
    let values = parts.iter().map(|p| join_name(p)).collect();
    (
        DataExample::new(Instance::from_parts(values, facts), tuple),
        ProductValues { parts },
    )
}

fn join_name(parts: &[Name]) -> Name {
    let inner: Vec<&str> = parts.iter().map(|p| &**p).collect();
    Name::from(format!("⟨{}⟩", inner.join(",")))
}

fn atomic_parts(e: &DataExample) -> ProductValues {
    ProductValues {
        parts: e.instance().values().iter().map(|v| vec![v.clone()]).collect(),
    }
}

/// Direct product; only values occurring in facts or in the tuple are kept.
pub fn direct_product(e1: &DataExample, e2: &DataExample) -> Result<DataExample> {
    if e1.arity() != e2.arity() {
        return Err(Error::ArityMismatch(format!(
            "product of arity {} and {}",
            e1.arity(),
            e2.arity()
        )));
    }
    Ok(product_raw(e1, &atomic_parts(e1), e2, &atomic_parts(e2)).0)
}

/// Left fold of [`direct_product`] with flattened value names `⟨a,b,c⟩`.
pub fn product_all(es: &[DataExample]) -> Result<DataExample> {
    let (first, rest) = es.split_first().ok_or(Error::EmptyList)?;
    if rest.is_empty() {
        return Ok(first.clone());
    }
    let mut acc = first.clone();
    let mut acc_parts = atomic_parts(first);
    for e in rest {
        if e.arity() != acc.arity() {
            return Err(Error::ArityMismatch(format!(
                "product of arity {} and {}",
                acc.arity(),
                e.arity()
            )));
        }
        let (p, parts) = product_raw(&acc, &acc_parts, e, &atomic_parts(e));
        acc = p;
        acc_parts = parts;
    }
    Ok(acc)
}

/// `q⊥(x,…,x) :- R1(x,…,x), …, Rn(x,…,x)`.
pub fn maximally_constrained(s: &Schema, k: usize) -> Result<Cq> {
    if s.is_empty() {
        return Err(Error::EmptySchema);
    }
    let facts = s
        .iter()
        .map(|(r, a)| Fact {
            relation: r.clone(),
            args: vec![0; a],
        })
        .collect();
    let inst = Instance::from_parts(vec![Name::from("x")], facts);
    Cq::from_example(DataExample::new(inst, vec![0; k]))
}

/// All CQs with one atom `R(y, xi, z)` per answer position `i`, the `y, z`
/// fresh and distinct, up to isomorphism. For `k = 0`: one all-fresh atom
/// per relation.
pub fn minimally_constrained_set(s: &Schema, k: usize) -> Result<Vec<Cq>> {
    if s.is_empty() {
        return Err(Error::EmptySchema);
    }
    let slots: Vec<(Name, usize, usize)> = s
        .iter()
        .flat_map(|(r, a)| (0..a).map(move |p| (r.clone(), a, p)))
        .collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    if k == 0 {
        for (r, a) in s.iter() {
            let inst = Instance::from_parts(
                (0..a).map(|i| Name::from(format!("v{i}"))).collect(),
                vec![Fact {
                    relation: r.clone(),
                    args: (0..a as u32).collect(),
                }],
            );
            out.push(canonical_cq(&DataExample::new(inst, Vec::new()))?);
        }
        return Ok(out);
    }
    let mut choice = vec![0usize; k];
    loop {
        let mut values: Vec<Name> = (0..k).map(|i| Name::from(format!("x{i}"))).collect();
        let mut facts = Vec::new();
        for (i, &c) in choice.iter().enumerate() {
            let (r, a, p) = &slots[c];
            let mut args = Vec::with_capacity(*a);
            for j in 0..*a {
                if j == *p {
                    args.push(i as u32);
                } else {
                    values.push(Name::from(format!("f{}", values.len())));
                    args.push(values.len() as u32 - 1);
                }
            }
            facts.push(Fact {
                relation: r.clone(),
                args,
            });
        }
        let e = DataExample::new(Instance::from_parts(values, facts), (0..k as u32).collect());
        if seen.insert(format!("{:?}", canonical_form(&e))) {
            out.push(canonical_cq(&e)?);
        }
        let mut i = 0;
        loop {
            if i == k {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < slots.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Back-translation for [`normalize_head`]: original answer position →
/// position in the repetition-free head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadNormalization {
    pub positions: VarMapping,
}

impl HeadNormalization {
    /// Restores the original head shape on a query over the normalized head.
    pub fn restore_head(&self, q: &Cq) -> Result<Cq> {
        let head: Vec<u32> = self
            .positions
            .entries()
            .iter()
            .map(|&p| q.head()[p as usize])
            .collect();
        let e = DataExample::new(q.canonical_example().instance().clone(), head);
        canonical_cq(&e)
    }

    /// Restores the original tuple shape of an example.
    pub fn restore_example(&self, e: &DataExample) -> DataExample {
        let tuple = self
            .positions
            .entries()
            .iter()
            .map(|&p| e.tuple()[p as usize])
            .collect();
        DataExample::new(e.instance().clone(), tuple)
    }

    pub fn is_identity(&self) -> bool {
        self.positions
            .entries()
            .iter()
            .enumerate()
            .all(|(i, &p)| p as usize == i)
    }
}

/// Reduces to a repetition-free head: the query keeps the first occurrence
/// of each answer variable; each example is quotiented by the equalities
/// `ai = aj` for `xi = xj` and its tuple projected the same way.
pub fn normalize_head(
    q: &Cq,
    e: &LabeledExampleSet,
) -> Result<(Cq, LabeledExampleSet, HeadNormalization)> {
    e.check_arity(q.arity())?;
    let head = q.head();
    let mut firsts: Vec<usize> = Vec::new();
    let mut positions = Vec::with_capacity(head.len());
    for (i, v) in head.iter().enumerate() {
        match firsts.iter().position(|&f| head[f] == *v) {
            Some(p) => positions.push(p as u32),
            None => {
                positions.push(firsts.len() as u32);
                firsts.push(i);
            }
        }
    }
    let norm = HeadNormalization {
        positions: VarMapping::new(positions),
    };
    if norm.is_identity() {
        return Ok((q.clone(), e.clone(), norm));
    }
    let new_head: Vec<u32> = firsts.iter().map(|&i| head[i]).collect();
    let qn = Cq::from_example(DataExample::new(
        q.canonical_example().instance().clone(),
        new_head,
    ))?;
    let project = |ex: &DataExample| -> DataExample {
        let n = ex.num_values() as u32;
        let mut parent: Vec<u32> = (0..n).collect();
        for (i, &p) in norm.positions.entries().iter().enumerate() {
            let a = ex.tuple()[i];
            let b = ex.tuple()[firsts[p as usize]];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
        let classes: Vec<u32> = (0..n).map(|v| find(&mut parent, v)).collect();
        let tuple: Vec<u32> = firsts.iter().map(|&i| ex.tuple()[i]).collect();
        quotient(&DataExample::new(ex.instance().clone(), tuple), &classes)
    };
    let en = LabeledExampleSet::new(
        e.positives().iter().map(project).collect(),
        e.negatives().iter().map(project).collect(),
    )?;
    Ok((qn, en, norm))
}
