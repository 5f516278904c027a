use std::fmt;

use num_rational::Ratio;

use crate::canon::canonical_form;
use crate::cores::core_example;
use crate::hom::contained;
use crate::model::{serialize_cq, Cq};

/// Outcome of a verification or existence question answered by bounded
/// search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Yes,
    No,
    /// Nothing refuted up to the bound; not a proof.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedVerdict {
    pub status: Status,
    /// Size bound the search was cut at.
    pub bound: usize,
    /// Counterexample for `No`, where one exists.
    pub witness: Option<Cq>,
}

impl BoundedVerdict {
    pub fn yes(bound: usize) -> Self {
        BoundedVerdict {
            status: Status::Yes,
            bound,
            witness: None,
        }
    }

    pub fn no(bound: usize, witness: Option<Cq>) -> Self {
        BoundedVerdict {
            status: Status::No,
            bound,
            witness,
        }
    }

    pub fn unknown(bound: usize) -> Self {
        BoundedVerdict {
            status: Status::Unknown,
            bound,
            witness: None,
        }
    }

    pub fn from_bool(b: bool, bound: usize) -> Self {
        if b {
            Self::yes(bound)
        } else {
            Self::no(bound, None)
        }
    }
}

impl fmt::Display for BoundedVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status {
            Status::Yes => f.write_str("yes"),
            Status::No => f.write_str("no"),
            Status::Unknown => write!(f, "yes-at-bound({})", self.bound),
        }
    }
}

/// A result query with its distance from the input query, when measured.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranked {
    pub query: Cq,
    pub distance: Option<Ratio<u64>>,
}

/// Output of a construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairResult {
    pub queries: Vec<Ranked>,
    /// The set is complete only up to `bound`; more results may exist.
    pub bound_limited: bool,
    pub bound: Option<usize>,
    pub warnings: Vec<String>,
}

impl RepairResult {
    pub fn exact(queries: Vec<Ranked>) -> Self {
        RepairResult {
            queries,
            ..Default::default()
        }
    }

    pub fn bounded(queries: Vec<Ranked>, bound: usize) -> Self {
        RepairResult {
            queries,
            bound_limited: true,
            bound: Some(bound),
            warnings: Vec::new(),
        }
    }

    pub fn cqs(&self) -> Vec<&Cq> {
        self.queries.iter().map(|r| &r.query).collect()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Cores of `qs`, one per equivalence class, ordered by (size, text).
pub(crate) fn dedup_equivalent(qs: Vec<Cq>) -> Vec<Cq> {
    let mut seen = std::collections::HashSet::new();
    let mut out: Vec<(usize, String, Cq)> = Vec::new();
    for q in qs {
        let core = core_example(q.canonical_example());
        if seen.insert(canonical_form(&core)) {
            let c = Cq::from_example(core).expect("cores keep answer variables");
            out.push((c.size(), serialize_cq(&c), c));
        }
    }
    out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    out.into_iter().map(|(_, _, q)| q).collect()
}

/// The ⊆-maximal members of a deduplicated list.
pub(crate) fn maximal(qs: &[Cq]) -> Vec<Cq> {
    qs.iter()
        .filter(|q| {
            !qs.iter()
                .any(|o| contained(q, o).unwrap_or(false) && !contained(o, q).unwrap_or(false))
        })
        .cloned()
        .collect()
}

pub(crate) fn unranked(qs: Vec<Cq>) -> Vec<Ranked> {
    qs.into_iter()
        .map(|query| Ranked {
            query,
            distance: None,
        })
        .collect()
}
