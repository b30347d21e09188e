//! Index advisor toolkit.
//!
//! The crate is organized as a pipeline over a deterministic analytic cost
//! model:
//!
//! 1. [`catalog`] — schemas, per-column statistics, and seeded miniature
//!    data generation.
//! 2. [`sqlfront`] — a small SQL-subset parser, indexable-column extraction,
//!    and query similarity.
//! 3. [`costmodel`] — the what-if cost estimator every downstream stage
//!    consults.
//! 4. [`rewriter`] — equivalence-preserving rewrite rules validated by
//!    bag-semantics evaluation on random miniature instances.
//! 5. [`compressor`] — three-phase workload compression ending in a
//!    weighted-bipartite-graph query selection.
//! 6. [`candidates`] — width-bounded index candidate enumeration with
//!    relevance, validity, and superset-pruning filters.
//! 7. [`gym`] — the index-selection environment with vectorized stepping.
//! 8. [`agent`] — actor-critic learner with a state-wise selector network
//!    and Thompson-sampled action masking.
//! 9. [`advisors`] — greedy benefit-per-byte baseline and an exhaustive
//!    optimal oracle for small pools.
//!
//! Everything is deterministic given the seeds threaded through
//! [`seeds::subseed`].

pub mod catalog;
pub mod costmodel;
pub mod rewriter;
pub mod seeds;
pub mod sqlfront;
