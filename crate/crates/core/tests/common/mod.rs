#![allow(dead_code)]

pub mod graph;
pub mod oracles;
pub mod properties;
