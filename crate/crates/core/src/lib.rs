//! 2-Opt local search laboratory.
//!
//! Instances live in `R^d` under an `L_p` metric. The engine runs 2-Opt with
//! a choice of pivot rules and records every step; the gadget families
//! produce instances with exponentially long improving paths; the analysis
//! module decomposes runs into linked pairs and provides exact oracles.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod gadgets;
pub mod geometry;
pub mod heuristics;
pub mod io;
pub mod random_models;

pub use analysis::{
    crossing_count, held_karp_opt, linked_pair_decomposition, min_improvement, opt_lower_bound,
    state_graph_longest_path, ImprovementScope, PairReport, PairType,
};
pub use engine::{run, run_with, PivotKind, PivotRule, RunOptions, RunTrace, StepRecord, Termination};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ModelKind, RecordRow};
pub use gadgets::{
    inequality_margins, verify_script, FamilyKind, GadgetFamily, GadgetScript, VerificationReport,
};
pub use geometry::{
    apply_two_change, distance, tour_length, two_change_delta, Instance, Metric, Point, Tour,
    TwoChange,
};
pub use heuristics::{insertion_tour, random_tour, InsertionPolicy};
