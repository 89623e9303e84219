pub mod error;
pub mod potential;
pub mod prop;
pub mod resonance;
pub mod spectrum;
pub mod threshold;
pub mod quasimode;
pub mod harness;
