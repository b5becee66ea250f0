//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod brute;
pub mod corpus;
pub mod reference;
pub mod suites;
