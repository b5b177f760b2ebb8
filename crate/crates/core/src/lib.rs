//! Spacetime density matrices for timelike-separated subsystems, with
//! exact-diagonalization, free-fermion and conformal-field-theory checks and
//! a statevector simulator for the SWAP-test measurement protocols.

pub mod tensor_core;
pub mod spacetime_density;
pub mod ising_harness;
pub mod free_fermion;
pub mod cft_analytics;
pub mod circuit_sim;
pub mod cli;
