pub mod error;
pub mod fft;
pub mod wavelets;
pub mod filterbank;
pub mod scalogram;
pub mod scattering;
pub mod sourcefilter;
pub mod pipeline;
pub mod validation;
pub mod io;
pub mod config;
pub mod cli;
