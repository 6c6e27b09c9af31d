//! Command-line front end for the `pemo` crate: batch threshold simulation,
//! observation-period sweeps, ICRA noise comparisons, tone demos, and
//! analysis exports. The binary is called `pemo`.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod reference;
pub mod table;
