//! Seeded experiment campaigns: phase-transition sweeps and audits of the
//! stability bound on certified instances.
//!
//! Trial `(k index, q index, trial)` draws everything from
//! `derive_seed(master_seed, [k index, q index, trial])`, split into
//! separate sub-streams for the matrix, signal, noise and solver, so results
//! do not depend on scheduling.

mod audit;
mod config;
mod ensemble;
mod phase;

pub use audit::{run_bound_audit, AuditOutcome, AuditReport, AuditTrial};
pub use config::{write_records_csv, ExperimentConfig, NoiseSpec, TrialRecord, CSV_HEADER};
pub use ensemble::{gen_gaussian, gen_noise, gen_sparse, MatrixEnsemble, SignalDistribution};
pub use phase::{run_phase, PhaseCell, PhaseReport};
