//! Seeded generators and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cqrepair::canon::canonical_form;
use cqrepair::cores::core_example;
use cqrepair::hom::member;
use cqrepair::model::{parse_cq, Cq, DataExample, Instance, LabeledExampleSet, Schema};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Schemas with at most two relations.
pub fn schemas() -> Vec<Schema> {
    ["R/2", "R/2, P/1", "P/1, Q/1", "R/2, S/2"]
        .iter()
        .map(|s| Schema::parse(s).unwrap())
        .collect()
}

fn relations(schema: &Schema) -> Vec<(String, usize)> {
    schema.iter().map(|(r, a)| (r.to_string(), a)).collect()
}

fn atom_text(rel: &str, args: &[usize], names: &dyn Fn(usize) -> String) -> String {
    let a: Vec<String> = args.iter().map(|&v| names(v)).collect();
    format!("{rel}({})", a.join(","))
}

/// A random safe CQ with `1..=max_atoms` atoms over at most `max_vars` variables.
pub fn random_cq(rng: &mut Rng8, schema: &Schema, k: usize, max_atoms: usize, max_vars: usize) -> Cq {
    let rels = relations(schema);
    let n_vars = rng.gen_range(k.max(1)..=max_vars.max(k.max(1)));
    let n_atoms = rng.gen_range(1..=max_atoms);
    let mut atoms: Vec<(String, Vec<usize>)> = (0..n_atoms)
        .map(|_| {
            let (r, a) = rels.choose(rng).unwrap().clone();
            (r, (0..a).map(|_| rng.gen_range(0..n_vars)).collect())
        })
        .collect();
    // safety: each answer variable occurs in some atom
    for h in 0..k {
        if !atoms.iter().any(|(_, args)| args.contains(&h)) {
            let i = rng.gen_range(0..atoms.len());
            let j = rng.gen_range(0..atoms[i].1.len());
            atoms[i].1[j] = h;
        }
    }
    let names = |v: usize| format!("v{v}");
    let head: Vec<String> = (0..k).map(names).collect();
    let body: Vec<String> = atoms.iter().map(|(r, a)| atom_text(r, a, &names)).collect();
    parse_cq(&format!("q({}) :- {}.", head.join(","), body.join(", "))).unwrap()
}

/// The same query written differently: renamed variables, shuffled atoms and
/// a redundant copy of one atom whose existential variables are fresh.
pub fn rewrite(rng: &mut Rng8, q: &Cq) -> Cq {
    let n = q.num_vars();
    let k = q.arity();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let salt = rng.gen_range(0..1000);
    let names = move |v: usize| format!("w{}_{salt}", perm[v]);
    let head_vars: Vec<u32> = q.head().to_vec();
    let mut atoms: Vec<String> = q
        .atoms()
        .iter()
        .map(|a| {
            let args: Vec<usize> = a.args.iter().map(|&v| v as usize).collect();
            atom_text(&a.relation, &args, &names)
        })
        .collect();
    if !q.atoms().is_empty() {
        let a = q.atoms().choose(rng).unwrap();
        let fresh = |v: u32| {
            if head_vars.contains(&v) {
                names(v as usize)
            } else {
                format!("f{v}")
            }
        };
        let args: Vec<String> = a.args.iter().map(|&v| fresh(v)).collect();
        atoms.push(format!("{}({})", a.relation, args.join(",")));
    }
    atoms.shuffle(rng);
    let head: Vec<String> = q.head().iter().map(|&v| names(v as usize)).collect();
    let _ = k;
    parse_cq(&format!("q({}) :- {}.", head.join(","), atoms.join(", "))).unwrap()
}

/// A random example with `0..=max_facts` facts over `values` values.
pub fn random_example(rng: &mut Rng8, schema: &Schema, k: usize, max_facts: usize, values: usize) -> DataExample {
    let rels = relations(schema);
    let mut b = Instance::builder();
    let names: Vec<String> = (0..values).map(|i| format!("c{i}")).collect();
    let n = rng.gen_range(1..=max_facts.max(1));
    for _ in 0..n {
        let (r, a) = rels.choose(rng).unwrap();
        let args: Vec<&str> = (0..*a).map(|_| names.choose(rng).unwrap().as_str()).collect();
        b.fact(r, &args).unwrap();
    }
    let inst = b.build();
    let adom: Vec<String> = inst.values().iter().map(|v| v.to_string()).collect();
    let tuple: Vec<&str> = (0..k).map(|_| adom.choose(rng).unwrap().as_str()).collect();
    DataExample::with_tuple(inst, &tuple).unwrap()
}

/// Every example over `schema` with at most `max_facts` facts on the values
/// `c0..c{values-1}`, with every tuple over the active domain.
pub fn all_examples(schema: &Schema, k: usize, max_facts: usize, values: usize) -> Vec<DataExample> {
    let mut facts = Vec::new();
    for (r, a) in relations(schema) {
        let mut idx = vec![0usize; a];
        loop {
            facts.push((r.clone(), idx.clone()));
            let mut i = 0;
            while i < a {
                idx[i] += 1;
                if idx[i] < values {
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
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    subsets(&facts, 0, max_facts, &mut chosen, &mut |set| {
        let mut b = Instance::builder();
        for (r, args) in set {
            let names: Vec<String> = args.iter().map(|v| format!("c{v}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            b.fact(r, &refs).unwrap();
        }
        let inst = b.build();
        let adom: Vec<String> = inst.values().iter().map(|v| v.to_string()).collect();
        if k > 0 && adom.is_empty() {
            return;
        }
        let mut tuple = vec![0usize; k];
        loop {
            let t: Vec<&str> = tuple.iter().map(|&i| adom[i].as_str()).collect();
            out.push(DataExample::with_tuple(inst.clone(), &t).unwrap());
            let mut i = 0;
            while i < k {
                tuple[i] += 1;
                if tuple[i] < adom.len() {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    });
    out
}

fn subsets<T: Clone>(items: &[T], from: usize, left: usize, chosen: &mut Vec<T>, f: &mut dyn FnMut(&[T])) {
    f(chosen);
    if left == 0 {
        return;
    }
    for i in from..items.len() {
        chosen.push(items[i].clone());
        subsets(items, i + 1, left - 1, chosen, f);
        chosen.pop();
    }
}

/// ⟦q⟧ ⊕ ⟦q1⟧ ⊆ ⟦q⟧ ⊕ ⟦q2⟧ on the given examples.
pub fn brute_cod_leq(q: &Cq, q1: &Cq, q2: &Cq, examples: &[DataExample]) -> bool {
    examples.iter().all(|e| {
        let a = member(e, q).unwrap();
        member(e, q1).unwrap() == a || member(e, q2).unwrap() != a
    })
}

/// Canonical forms of the cores: equal iff the queries are equivalent.
pub fn core_keys(qs: &[&Cq]) -> BTreeSet<String> {
    qs.iter()
        .map(|q| canonical_form(&core_example(q.canonical_example())).to_string())
        .collect()
}

pub fn random_labeled(
    rng: &mut Rng8,
    schema: &Schema,
    k: usize,
    max_examples: usize,
    max_facts: usize,
) -> LabeledExampleSet {
    let n = rng.gen_range(1..=max_examples);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for _ in 0..n {
        let e = random_example(rng, schema, k, max_facts, 3);
        if rng.gen_bool(0.5) {
            pos.push(e);
        } else {
            neg.push(e);
        }
    }
    LabeledExampleSet::new(pos, neg).unwrap()
}
