#![allow(dead_code)]

pub mod brute_metrics;
pub mod straight_line;
