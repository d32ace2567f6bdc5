//! Numerical verification engine for warped products in almost contact
//! metric manifolds.

pub mod almost_contact;
pub mod cli;
pub mod error;
pub mod jet;
pub mod immersion;
pub mod manifold;
pub mod report;
pub mod sampling;
pub mod scenarios;
pub mod theorems;
pub mod warped;

pub use error::{GeomError, Result};
