//! Stimulus conditions of both experiments, presentation orders, synthetic
//! participants and behavioral record files.

mod condition;
mod records;
mod simulate;

pub use condition::{
    builtin_condition, builtin_conditions, ground_truth_rule, load_conditions, resolve_conditions, CandidateDoc, Condition, ConditionDoc,
    Counterbalance, LearningDoc, Meta, Regime, SpaceRef, Task, TaskDoc,
};
pub use records::{group_runs, read_records_csv, write_records_csv, BehavioralRecord, RunKey};
pub use simulate::{simulate_participants, simulate_rule_learning, EvidenceBalance};
