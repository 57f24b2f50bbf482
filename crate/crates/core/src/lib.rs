//! Adaptive teaching of simulated and human students.

pub mod concepts;
pub mod harness;
pub mod llm;
pub mod session;
pub mod students;
pub mod teachers;
