//! Problem catalogue, single runs, studies built from many runs, and file output.

pub mod output;
pub mod problems;
pub mod run;
pub mod studies;

pub use output::{Format, Table};
pub use problems::{ProblemConfig, ProblemId};
pub use run::{run_problem, run_with_scheme, RunError, RunOptions, RunOutput};
pub use studies::{convergence_study, entropy_comparison, max_timestep_search, EntropyComparison, MaxDtResult, SearchSettings};
