//! Independent oracles shared by the acceptance and property suites.
#![allow(dead_code)]

pub mod automata;
pub mod backtrack;
pub mod heap_model;
pub mod regex_gen;
