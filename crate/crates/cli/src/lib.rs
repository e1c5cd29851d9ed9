//! Library surface of the `mflqr` experiment runner (used by the binary
//! and the integration tests).

pub mod config;
pub mod drivers;
pub mod output;
