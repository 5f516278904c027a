//! Repairing conjunctive queries from labeled examples.
//!
//! A query that misses wanted answers or returns unwanted ones is replaced
//! by fitting queries that stay close to it. Closeness is either
//! containment of the difference ([`cod`]) or a distance ([`metrics`],
//! [`dist_repair`]).
//!
//! ```
//! use cqrepair::dist_repair::{edit_repair_construct, Mode};
//! use cqrepair::model::{parse_cq, parse_labeled};
//!
//! let q = parse_cq("q(x) :- P(x), Q(x).")?;
//! let e = parse_labeled("+example\nP(a).\ntuple: (a)")?;
//! let r = edit_repair_construct(&q, &e, Mode::Generalize)?;
//! assert_eq!(r.queries[0].query.to_string(), "q(x) :- P(x).");
//! # Ok::<(), cqrepair::error::Error>(())
//! ```
//!
//! Searches that cannot be complete are cut at a size bound and say so in
//! their result; see [`result`].

pub mod canon;
pub mod cli;
pub mod cod;
pub mod cores;
pub mod dist_repair;
pub mod error;
pub mod fitting;
pub mod hom;
pub mod metrics;
pub mod model;
pub mod result;

// Book chapters compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/homomorphisms.md")]
    mod homomorphisms {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/cod.md")]
    mod cod {}
    #[doc = include_str!("../../../book/src/edit.md")]
    mod edit {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
