//! Effort allocation, baseline and equilibrium solvers for contests in which
//! players split effort between creative work and mechanistic tuning.

pub mod model;
pub mod costmin;
pub mod baseline;
pub mod quad;
pub mod equilibrium;
pub mod hacking;
pub mod simulate;
pub mod export;
pub mod golden;
