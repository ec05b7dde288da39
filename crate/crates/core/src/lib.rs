//! Runge-Kutta-Nystrom splitting integrators with real and complex
//! coefficients: order conditions, BCH error analysis, integration, and
//! benchmark tooling.

pub mod bench;
pub mod conditions;
pub mod integrate;
pub mod lie;
pub mod methods;
pub mod problems;
pub mod reference;
