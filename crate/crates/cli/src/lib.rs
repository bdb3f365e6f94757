//! JSON interchange and report types for the `schur-agler` command-line tool.

pub mod json;
