//! Bias-corrected extreme value index and extreme quantile estimation for
//! heavy-tailed, serially dependent time series.
//!
//! * [`tail`]: kernel estimators of the tail index, the optimal bias-cancelling
//!   mixture, second-order parameter estimation and extreme quantiles.
//! * [`tsgen`]: reproducible AR(1), MA(1) and GARCH simulation with Fréchet-mixture
//!   or standardized Student-t innovations.
//! * [`mc_study`]: Monte Carlo ABias / RMSE comparison of quantile estimators.
//! * [`backtest`]: rolling out-of-sample forecasts, Kupiec coverage test, block
//!   bootstrap and the ARIMA(1,1,1) residual filter.

pub mod backtest;
pub mod error;
pub mod io;
pub mod mc_study;
pub mod quadrature;
pub mod tail;
pub mod tsgen;

pub use error::{Result, TailError};
pub use tail::*;
