pub mod covcor;
pub mod cube;
pub mod ensemble;
pub mod forecast;
pub mod krige;
pub mod synth;
