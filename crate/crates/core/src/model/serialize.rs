//! Deterministic text output, inverse to the parsers.

use super::{Cq, DataExample, Instance, LabeledExampleSet};
use crate::canon::display_form;

/// `q(x) :- R(x,y), S(y,z).` with canonical variable names and atom order.
/// Equal-up-to-renaming queries serialize identically.
pub fn serialize_cq(q: &Cq) -> String {
    let d = display_form(q.canonical_example());
    let head: Vec<&str> = d.tuple().iter().map(|&v| d.value_name(v)).collect();
    let mut atoms: Vec<(String, Vec<u32>)> = d
        .facts()
        .iter()
        .map(|f| (f.relation.to_string(), f.args.clone()))
        .collect();
    atoms.sort();
    let body: Vec<String> = atoms
        .iter()
        .map(|(r, args)| {
            let a: Vec<&str> = args.iter().map(|&v| d.value_name(v)).collect();
            format!("{r}({})", a.join(","))
        })
        .collect();
    if body.is_empty() {
        format!("q({}) :- .", head.join(","))
    } else {
        format!("q({}) :- {}.", head.join(","), body.join(", "))
    }
}

fn value_token(name: &str) -> String {
    let plain = name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.is_empty();
    let product = name.starts_with('⟨') && name.ends_with('⟩') && !name.contains(['\n', '"']);
    if plain || product {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

fn fact_lines(i: &Instance) -> Vec<String> {
    let mut lines: Vec<String> = i
        .facts()
        .iter()
        .map(|f| {
            let args: Vec<String> = f.args.iter().map(|&a| value_token(i.value_name(a))).collect();
            format!("{}({}).", f.relation, args.join(","))
        })
        .collect();
    lines.sort();
    lines
}

/// One fact per line, sorted.
pub fn serialize_instance(i: &Instance) -> String {
    let mut out = String::new();
    for l in fact_lines(i) {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Facts followed by `tuple: (…)`.
pub fn serialize_example(e: &DataExample) -> String {
    let mut out = serialize_instance(e.instance());
    let t: Vec<String> = e.tuple().iter().map(|&v| value_token(e.value_name(v))).collect();
    out.push_str(&format!("tuple: ({})\n", t.join(",")));
    out
}

pub fn serialize_labeled(e: &LabeledExampleSet) -> String {
    let mut out = String::new();
    for p in e.positives() {
        out.push_str("+example\n");
        out.push_str(&serialize_example(p));
    }
    for n in e.negatives() {
        out.push_str("-example\n");
        out.push_str(&serialize_example(n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::is_isomorphic;
    use crate::model::{parse_cq, parse_example, parse_labeled};

    #[test]
    fn cq_round_trip_and_stability() {
        let q = parse_cq("ans(b) :- S(c,a), R(b,c), R(b,c).").unwrap();
        let s = serialize_cq(&q);
        assert_eq!(s, serialize_cq(&q));
        let back = parse_cq(&s).unwrap();
        assert!(is_isomorphic(back.canonical_example(), q.canonical_example()));
        assert_eq!(serialize_cq(&back), s);
    }

    #[test]
    fn renamed_bodies_serialize_identically() {
        let a = parse_cq("q(x) :- R(x,y), R(y,z).").unwrap();
        let b = parse_cq("q(m) :- R(n,o), R(m,n).").unwrap();
        assert_eq!(serialize_cq(&a), serialize_cq(&b));
        assert_eq!(serialize_cq(&a), "q(x) :- R(x,y), R(y,z).");
    }

    #[test]
    fn examples_round_trip() {
        let e = parse_example("R(a,\"b c\"). P(⟨a,b⟩).\ntuple: (a)").unwrap();
        let back = parse_example(&serialize_example(&e)).unwrap();
        assert_eq!(serialize_example(&back), serialize_example(&e));
        let set = parse_labeled("+example\nP(a).\ntuple: (a)\n-example\nQ(b).\ntuple: (b)\n")
            .unwrap();
        let text = serialize_labeled(&set);
        assert_eq!(serialize_labeled(&parse_labeled(&text).unwrap()), text);
    }

    #[test]
    fn empty_boolean_query() {
        let s = serialize_cq(&Cq::empty_boolean());
        assert_eq!(s, "q() :- .");
        assert_eq!(parse_cq(&s).unwrap(), Cq::empty_boolean());
    }
}
