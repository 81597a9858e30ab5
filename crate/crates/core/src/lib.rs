//! A retargetable optimizing compiler for a subset of Quil.
//!
//! The pipeline parses a program, splits it into basic blocks, places and
//! routes each block onto a chip described by a [`chipspec::ChipSpecification`],
//! nativizes every gate, and compresses the result with local rewriting and
//! resynthesis.

pub mod frontend;
pub mod chipspec;
pub mod ir;
pub mod linalg;
pub mod rules;
pub mod statesim;
pub mod cfg;
pub mod addresser;
pub mod compressor;
pub mod sim;
pub mod pipeline;
