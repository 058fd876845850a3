//! Independent reference solvers shared by integration tests.
#![allow(dead_code)]

pub mod cases;
pub mod holder;
pub mod iso;
pub mod oracle;
