//! Model export, solver solution files, external solver runs, and the
//! mapping between plans and variable values.

mod codec;
mod external;
mod mps;
mod solution;

pub use codec::{decode_solution, decode_values, encode_plan, BINARY_TOL};
pub use external::{run_external, ExternalConfig, SOLVER_CMD_ENV};
pub use mps::{mps_string, row_name, write_mps};
pub use solution::{parse_solution, Solution, SolutionSource};
