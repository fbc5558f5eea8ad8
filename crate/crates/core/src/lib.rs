//! Continuous Galerkin finite element solver for scalar hyperbolic
//! conservation laws with dissipation-based WENO stabilization, plus the
//! benchmark problems and convergence harness built on top of it.

pub mod assembly;
pub mod config;
pub mod driver;
pub mod element;
pub mod exec;
pub mod flux;
pub mod gradient;
pub mod mesh;
pub mod output;
pub mod problems;
pub mod sensor;
pub mod sparse;
pub mod stabilization;
pub mod system;
pub mod time;
