//! Desk-scale stochastic equilibrium model of an electricity market with
//! long-duration energy storage.
//!
//! Investment, dispatch, a capacity market and a carbon cap are cleared
//! together as one concave quadratic program: the welfare maximum of the
//! central planner is the competitive equilibrium, and the duals of the
//! market-clearing rows are the prices. On top of that the crate computes
//! storage capacity credits from marginal changes in expected unserved
//! energy, calibrates a capacity demand curve from net-CONE, and compares
//! market designs.
//!
//! * [`domain`]: scenarios, technologies, demand functions, market designs.
//! * [`planner`]: program assembly, solution, agent profits.
//! * [`accreditation`]: unserved energy, marginal credits, credit-curve fits.
//! * [`calibration`]: net-CONE, capacity target, capacity demand curve.
//! * [`analysis`]: the run suite, welfare, storage book value, metrics and
//!   the credit sensitivity sweep.

pub mod accreditation;
pub mod analysis;
pub mod calibration;
pub mod domain;
pub mod planner;

pub use ldesmarket_qp as qp;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/markets.md")]
    mod markets {}
    #[doc = include_str!("../../../book/src/accreditation.md")]
    mod accreditation {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/book-value.md")]
    mod book_value {}
}
