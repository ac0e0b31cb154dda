//! Size-spectrum growth models and a time-inconsistent harvesting controller.
//!
//! The crate has two halves. The first describes fish body weight as
//! `W_t = K f(t)` with a gamma distributed asymptotic weight `K` and a
//! sigmoid growth fraction `f`, and calibrates it to survey records
//! ([`growth`], [`spectrum`], [`calibration`]). The second solves the
//! extended HJB system of a harvesting problem whose terminal utility is a
//! certainty-equivalent expectation, using an explicit finite-difference
//! scheme ([`control`]), and checks the result by Monte Carlo ([`mc`]).

pub mod calibration;
pub mod control;
pub mod error;
pub mod growth;
pub mod io;
pub mod mc;
pub mod optim;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
