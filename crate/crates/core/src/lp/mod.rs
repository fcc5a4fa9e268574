//! The revenue-maximization linear program, solved directly as ground truth
//! for small instances.

// Dense index loops read closer to the algebra here.
#[allow(clippy::needless_range_loop)]
mod model;
mod oracle;
#[allow(clippy::needless_range_loop)]
mod simplex;

pub use model::{build_primal_lp, LPModel, Row, RowKind, Sense, Side, LP_SIZE_LIMIT};
pub use oracle::{optimal_revenue_oracle, solve_lp, OracleResult};
pub use simplex::{solve_bounded, BoundedLp, BoundedRow, LpSolution, LpStatus};
