pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod potentials;
pub mod quadrature;
pub mod run;
pub mod special;
pub mod verify;
