//! Revenue-optimal single-item auctions for risk-loving buyers with
//! exponential utility, on discrete value and payment grids.
//!
//! The crate computes the optimal mechanisms in closed form (a randomized
//! take-it-or-leave-it price for one buyer, the loser-pay auction for
//! several), builds dual certificates that prove their optimality, and
//! solves the underlying linear program directly as an independent check.

pub mod direct;
pub mod error;
pub mod instance;
pub mod lp;
pub mod mechanisms;
pub mod utility;
pub mod verify;
pub mod virtual_value;

pub use direct::{DirectMechanism, InterimMechanism};
pub use error::{Error, Result};
pub use instance::{Instance, MenuOption, Profiles};
pub use lp::{build_primal_lp, optimal_revenue_oracle, solve_lp, LPModel, OracleResult};
pub use mechanisms::{
    check_assumption_A1, loser_pay_auction, menu_mechanism_revenue, menu_utility,
    optimal_posted_price, posted_price_revenue, to_direct, LoserPayMechanism, Mechanism,
    MenuMechanism, PostedPriceMechanism,
};
pub use utility::{acceptance_ratio, eval_utility, Utility};
pub use verify::{
    build_dual_certificate, check_dual_feasibility, check_mechanism, duality_gap, DualCertificate,
    VerificationReport,
};
pub use virtual_value::{
    iron, ironed_virtual_values, is_regular, virtual_values, virtual_values_multi,
    virtual_values_single, IronedVirtualValues, VirtualKind, VirtualValues,
};
