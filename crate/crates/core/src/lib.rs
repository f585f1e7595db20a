//! Axiomatic entropy engine.
//!
//! * [`order`]: finite adiabatic-accessibility relations and their closure.
//! * [`entropy`]: the canonical entropy construction, its verification and
//!   multiplicative calibration across systems.
//! * [`simple`]: simple systems in energy/work coordinates, adiabats and
//!   forward sectors.
//! * [`thermal`]: thermal join and splitting, temperature, zeroth law.
//! * [`calibration`]: entropy differences across state spaces and the additive
//!   constants.

pub mod calibration;
pub mod entropy;
pub mod order;
pub mod rational;
pub mod simple;
pub mod thermal;
