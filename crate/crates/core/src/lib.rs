pub mod backends;
pub mod cli;
pub mod cot;
pub mod eval;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod sampling;
