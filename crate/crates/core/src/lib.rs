pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod cli;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod qmc;
pub mod special;
pub mod spectral;
