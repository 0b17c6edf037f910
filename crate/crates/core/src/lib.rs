#![no_std]

extern crate alloc;

pub mod analysis;
pub mod eval;
pub mod exec;
pub mod linearize;
pub mod sql;
pub mod synth;
pub mod table;
pub mod template;

#[cfg(feature = "testkit")]
pub mod testkit;
