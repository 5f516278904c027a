mod common;

use common::*;
use cqrepair::canon::{canonical_form, is_isomorphic};
use cqrepair::cod::cod_leq;
use cqrepair::cores::core_cq;
use cqrepair::fitting::{fitting_exists, most_specific_fitting};
use cqrepair::hom::{contained, equivalent, evaluate, fits, hom_exists, member};
use cqrepair::metrics::{edit_dist, edit_dist_leq};
use cqrepair::model::{json, parse_cq, parse_labeled, serialize_labeled, DataExample};
use proptest::prelude::*;
use rand::Rng;

fn setup(seed: u64) -> (Rng8, cqrepair::model::Schema, usize) {
    let mut g = rng(seed);
    let s = schemas()[g.gen_range(0..4)].clone();
    let k = g.gen_range(0..=1);
    (g, s, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialized_queries_parse_back(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let q = random_cq(&mut g, &s, k, 5, 5);
        let back = parse_cq(&q.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), q.to_string());
        prop_assert!(is_isomorphic(back.canonical_example(), q.canonical_example()));
    }

    #[test]
    fn rewrites_keep_the_core(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let q = random_cq(&mut g, &s, k, 4, 4);
        let r = rewrite(&mut g, &q);
        prop_assert!(equivalent(&q, &r).unwrap());
        prop_assert_eq!(
            canonical_form(core_cq(&q).canonical_example()),
            canonical_form(core_cq(&r).canonical_example())
        );
        prop_assert_eq!(core_cq(&q).to_string(), core_cq(&r).to_string());
    }

    #[test]
    fn evaluation_matches_membership(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let q = random_cq(&mut g, &s, k, 3, 3);
        let e = random_example(&mut g, &s, 0, 5, 3);
        let answers = evaluate(&q, e.instance()).unwrap();
        let adom: Vec<String> = e.instance().values().iter().map(|v| v.to_string()).collect();
        let tuples: Vec<Vec<String>> = if k == 0 { vec![vec![]] } else { adom.iter().map(|a| vec![a.clone()]).collect() };
        for t in tuples {
            let refs: Vec<&str> = t.iter().map(String::as_str).collect();
            let ex = DataExample::with_tuple(e.instance().clone(), &refs).unwrap();
            prop_assert_eq!(answers.contains(&t), member(&ex, &q).unwrap());
        }
    }

    #[test]
    fn homomorphisms_compose(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let es: Vec<DataExample> = (0..3).map(|_| random_example(&mut g, &s, k, 3, 3)).collect();
        if hom_exists(&es[0], &es[1]) && hom_exists(&es[1], &es[2]) {
            prop_assert!(hom_exists(&es[0], &es[2]));
        }
        prop_assert!(hom_exists(&es[0], &es[0]));
    }

    #[test]
    fn bounded_edit_test_agrees(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let a = random_cq(&mut g, &s, k, 4, 4);
        let b = random_cq(&mut g, &s, k, 4, 4);
        let d = edit_dist(&a, &b).unwrap();
        prop_assert!(edit_dist_leq(&a, &b, d).unwrap());
        if d > 0 {
            prop_assert!(!edit_dist_leq(&a, &b, d - 1).unwrap());
        }
    }

    #[test]
    fn the_query_is_closest_to_itself(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let q = random_cq(&mut g, &s, k, 3, 3);
        let other = random_cq(&mut g, &s, k, 3, 3);
        prop_assert!(cod_leq(&q, &q, &other).unwrap());
        prop_assert!(cod_leq(&q, &other, &other).unwrap());
        prop_assert_eq!(cod_leq(&q, &other, &q).unwrap(), equivalent(&q, &other).unwrap());
    }

    #[test]
    fn most_specific_is_below_every_fitting_query(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let e = random_labeled(&mut g, &s, k, 3, 3);
        if e.positives().is_empty() {
            return Ok(());
        }
        let m = most_specific_fitting(&e).unwrap();
        prop_assert_eq!(m.is_some(), fitting_exists(&e));
        if let Some(m) = m {
            prop_assert!(fits(&m, &e).unwrap().fits);
            for _ in 0..5 {
                let q = random_cq(&mut g, &s, k, 3, 3);
                if fits(&q, &e).unwrap().fits {
                    prop_assert!(contained(&m, &q).unwrap());
                }
            }
        }
    }

    #[test]
    fn labeled_sets_round_trip(seed in any::<u64>()) {
        let (mut g, s, k) = setup(seed);
        let e = random_labeled(&mut g, &s, k, 4, 4);
        let q = random_cq(&mut g, &s, k, 3, 3);
        let text = serialize_labeled(&e);
        prop_assert_eq!(serialize_labeled(&parse_labeled(&text).unwrap()), text.clone());
        let (q2, e2) = json::from_json(&json::to_json(Some(&q), &e).unwrap()).unwrap();
        prop_assert_eq!(q2.unwrap().to_string(), q.to_string());
        prop_assert_eq!(serialize_labeled(&e2), text);
    }
}
