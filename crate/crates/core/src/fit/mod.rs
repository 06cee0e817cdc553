//! Response rule, choice likelihood, BIC, grid search and inter-participant
//! consistency.

mod consistency;
mod grid;
mod response;

pub use consistency::{consistency, cronbach_alpha, indicator_matrix, CellAlpha, ConsistencyReport, TrialAlpha};
pub use grid::{grid_search, write_table_csv, CellResult, FitResult, GridPatch, ParamGrid};
pub use response::{bic, log_likelihood, softmax, softmax_response, PROB_FLOOR};
