//! Closed-loop simulation of the two-RSU network: traffic, the per-slot
//! sense/track/decide loop, sweeps, output files and the `isac` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod selftest;
pub mod traffic;
pub mod world;
