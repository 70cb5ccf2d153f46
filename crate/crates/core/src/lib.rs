//! Constrained comonotonic risk sharing on finite probability spaces.

pub mod allocation;
pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod mvsolver;
pub mod numeric;
pub mod oracle;
pub mod probspace;
pub mod problem;
pub mod real;
pub mod report;
pub mod reproduce;
pub mod riskmeasures;
pub mod stochorder;

pub use error::{Error, Result};
