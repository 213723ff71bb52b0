pub mod birman_schwinger;
pub mod cli;
pub mod error;
pub mod fd_oracle;
pub mod format;
pub mod linalg;
pub mod models;
pub mod potential;
pub mod pseudospectrum;
pub mod quadrature;
pub mod resolvent_bounds;
pub mod spectral_kernel;
