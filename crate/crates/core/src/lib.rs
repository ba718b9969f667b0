// SPDX-License-Identifier: Apache-2.0

//! Syntax-aligned speculative decoding for Verilog.

pub mod corpus;
pub mod evalbench;
pub mod labelgen;
pub mod refmodel;
pub mod specdec;
pub mod tokenizer;
pub mod verilog;
