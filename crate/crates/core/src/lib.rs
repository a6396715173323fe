pub mod cli;
pub mod coeff;
pub mod lab;
pub mod decay;
pub mod parser;
pub mod polygon;
pub mod resolution;
pub mod series;
