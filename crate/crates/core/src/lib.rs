//! Exact p-adic Newton polygons of U_p characteristic series on truncated
//! spaces of locally analytic functions, together with the closed-form
//! bounds, dimensions and indices that accompany them.

pub mod bounds;
pub mod config;
pub mod error;
pub mod geometry;
pub mod iwahori;
pub mod newton;
pub mod padic_core;
pub mod rational;
pub mod rep_theory;
pub mod up_operator;
pub mod weight_space;
pub mod zp;

pub use error::{HaloError, Result};
pub use newton::NewtonPolygon;
pub use padic_core::{CycloContext, TruncatedElement, Valuation};
pub use weight_space::WeightCharacter;
