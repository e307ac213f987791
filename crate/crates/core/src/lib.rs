pub mod arima;
pub mod covcor;
pub mod datacube;
pub mod ensemble;
pub mod evolution;
pub mod geo;
pub mod hybrid;
pub mod interpolation;
pub mod neuralnet;
pub mod regressors;
pub mod synth;
pub mod table;

mod exec;
mod optim;
mod seeds;
mod stats;

pub use exec::run_with_threads;
