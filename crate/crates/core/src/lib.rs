pub mod cli;
pub mod dataset;
pub mod distributions;
pub mod evaluation;
pub mod inference;
mod numeric;
pub mod posterior;
pub mod structures;
