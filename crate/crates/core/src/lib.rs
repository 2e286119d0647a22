//! Exact reachability analysis for continuous vector addition systems with states.

pub mod csh;
pub mod geometry;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod reach;
pub mod zerotest;
pub mod rational;

pub use rational::{Rational, RationalVec};
