//! Parametric roll of a ship in irregular longitudinal waves.
//!
//! Sea spectra and the effective-wave transfer ([`spectra`]), a sixth-order
//! ARMA shaping filter for the effective wave ([`arma_fit`]), Monte Carlo
//! roll simulation ([`sim`]), Itô moment equations closed by cumulant
//! neglect ([`moments`], [`moment_odes`]) and exponential-polynomial roll
//! densities fitted to moments ([`pdf_fit`]). [`pipeline`] drives the
//! `parroll` command line; [`validation`] holds the acceptance checks.

pub mod arma_fit;
pub mod config;
pub mod error;
pub mod moment_odes;
pub mod moments;
pub mod optim;
pub mod pdf_fit;
pub mod periodogram;
pub mod pipeline;
pub mod poly;
pub mod ship;
pub mod sim;
pub mod spectra;
pub mod validation;

pub use error::{Error, Result};
