//! Cryptanalysis workbench for iterated ideal block ciphers.
//!
//! The crate models an ideal cipher as a seeded family of random
//! permutations, runs the generic classical attacks against 2- and
//! 4-encryption with exact query/memory ledgers, evaluates the
//! closed-form quantum cost models (Grover, quantum-walk claw finding,
//! MNRS composition) that those attacks quantize to, and validates the
//! models at desk scale with exact simulators and adversary-bound
//! numerics.

pub mod adversary;
pub mod attacks;
pub mod cost;
pub mod experiment;
pub mod oracle;
pub mod simulator;
