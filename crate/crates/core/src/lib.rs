//! Quadratic factors, local U³ norms and quadratic arithmetic regularity over
//! F_p^n at desk scale.

pub mod chains;
pub mod diagnostics;
pub mod error;
pub mod factors;
pub mod gf;
pub mod gowers;
pub mod growth;
pub mod localnorms;
pub mod par;
pub mod regularity;
pub mod set;
pub mod vc2;

pub use error::{Error, Result};
pub use par::Exec;
