pub mod allocation;
pub mod audit;
pub mod cli;
pub mod exchange;
pub mod generate;
pub mod goods;
pub mod io;
pub mod oracle;
pub mod solver;
pub mod valuation;
