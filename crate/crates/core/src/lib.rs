//! Coin schedules that steer a discrete-time quantum walk from the origin to
//! an arbitrary multipartite high-dimensional state.
//!
//! A walker on `[0, d)^c` carries a `c`-qubit coin. Each step applies a
//! position-dependent coin and then moves the walker along every axis whose
//! coin bit is set. The crate provides
//!
//! - [`stepwise`]: a `d - 1` step schedule for any target and any `c`;
//! - [`log_scheme`]: a schedule with `log2 d` coin steps for two parties and
//!   `d` a power of two;
//! - [`bell`]: closed-form schedules for generalized Bell states;
//! - [`walk`]: the sparse engine that runs schedules;
//! - [`circuit`]: lowering of bipartite schedules to a two-site circuit and
//!   long-distance CNOT counts;
//! - [`io`]: JSON formats for targets, schedules and reports.
//!
//! ```
//! use qwalk::bell::{bell_coins, bell_target, BellParams};
//! use qwalk::state::target_fidelity;
//! use qwalk::walk::run;
//!
//! let p = BellParams::new(3, 1, 2)?;
//! let schedule = bell_coins(p)?;
//! assert!(target_fidelity(&run(&schedule)?, &bell_target(p))? > 1.0 - 1e-12);
//! # Ok::<(), qwalk::error::Error>(())
//! ```

pub mod bell;
pub mod circuit;
pub mod error;
pub mod io;
pub mod log_scheme;
pub mod state;
pub mod stepwise;
pub mod unitary;
pub mod walk;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/walk-model.md")]
    mod walk_model {}
    #[doc = include_str!("../../../book/src/stepwise.md")]
    mod stepwise {}
    #[doc = include_str!("../../../book/src/logarithmic.md")]
    mod logarithmic {}
    #[doc = include_str!("../../../book/src/bell.md")]
    mod bell {}
    #[doc = include_str!("../../../book/src/distributed-cost.md")]
    mod distributed_cost {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
