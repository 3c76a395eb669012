//! Tree fragmentation processes, their mass-partition paths, and the
//! labs that check tightness, Poisson-embedding tails and the excursion limit.

pub mod cadlag;
pub mod masspart;
pub mod trees;
pub mod generators;
pub mod seed;
pub mod stats;
pub mod fragmenter;
pub mod tightlab;
pub mod poissonlab;
pub mod excursionlab;
pub mod config;
pub mod acceptance;
pub mod runner;
