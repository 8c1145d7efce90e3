//! Separation analysis, maximum-likelihood fitting and round-robin
//! summaries for Bradley-Terry paired-comparison models.

pub mod datamodel;
pub mod separation;
pub mod estimation;
pub mod summary;
pub mod cli;
