//! Command-line front end for `quadreg`: configuration, file formats, set
//! generators and the verification suite.

pub mod commands;
pub mod config;
pub mod generate;
pub mod io;
pub mod verify;
