//! Multi-objective evolutionary search over a layered convolutional
//! search space.
//!
//! A candidate network is a 46-gene chromosome (kernel sizes, widths,
//! per-unit depths, input resolution). Genotypes are scored by pluggable
//! surrogate evaluators: a feedforward accuracy predictor plus a
//! per-hardware latency lookup table, or a closed-form synthetic model
//! whose exact Pareto front is known by enumeration. Two from-scratch
//! multi-objective algorithms (generational non-dominated sorting with
//! crowding distance, and steady-state hypervolume-contribution
//! selection) approximate the error/latency front in a single run, next
//! to a constrained single-objective baseline. The resulting pools feed
//! committee experiments with hard and soft voting under sum or max
//! latency budgets.
//!
//! Everything is deterministic under a fixed seed, and all run artifacts
//! persist as diff-friendly structured text plus CSV (see
//! `docs/FORMATS.md`).

pub mod ensemble;
pub mod genotype;
pub mod moo;
pub mod persistence;
pub mod surrogate;
