pub mod cli;
pub mod config;
pub mod cv;
pub mod embedding;
pub mod engine;
pub mod enhance;
pub mod eval;
pub mod explain;
pub mod linalg;
pub mod tv;
pub mod value;
pub mod vecsearch;
