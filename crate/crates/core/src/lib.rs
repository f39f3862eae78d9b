pub mod cli;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod extremes;
pub mod kernel;
pub mod partition;
pub mod solver;
pub mod text;
