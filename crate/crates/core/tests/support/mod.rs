//! Checks shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

pub mod csma;
pub mod gts;
pub mod suites;
pub mod vectors;
