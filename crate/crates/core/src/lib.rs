pub mod chem;
pub mod error;
pub mod gateway;
pub mod io;
pub mod metrics;
pub mod output;
pub mod pipeline;
pub mod prompt;
pub mod reaction;
