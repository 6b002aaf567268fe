//! Covert-communication toolkit for state-dependent memoryless channels with
//! channel-state information at the transmitter.
//!
//! * [`probability`]: finite pmfs, joints, entropy, divergence, mutual information.
//! * [`channel`]: the state-dependent channel, the warden reference `Q0`,
//!   strategy maps and induced joints.
//! * [`capacity`]: causal and noncausal covert-rate solvers, the `C(A, B)`
//!   surface and a brute-force oracle.
//! * [`awgn`]: closed forms for the Gaussian channel with known interference.
//! * [`sim`]: random codebooks, encoders, ML decoding and the warden's exact
//!   output distribution at small blocklengths.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x >= 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod awgn;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod examples;
pub mod linalg;
pub mod optimize;
pub mod probability;
pub mod sim;

pub use capacity::{
    causal_capacity, causal_inner, key_rate_requirement, noncausal_capacity, AuxBound, CapacitySolution, Mode,
    SolverOptions,
};
pub use channel::{q0, StateDmc, StrategyMap};
pub use error::{Error, Result};
pub use probability::{ConditionalPmf, JointPmf, Pmf};
