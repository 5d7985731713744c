//! Daily analyses built on the Hawkes volatilities: GJR-GARCH, combined
//! intraday prediction, exceedance backtests, the futures→stock R²
//! surface and one-step forecasting.

mod backtest;
mod combine;
mod forecast;
mod gjr;
mod regression;

pub use backtest::{backtest_exceedance, coverage_curve, CoveragePoint, Exceedance};
pub use combine::{combined_loglik, combined_weights, CombinedWeights};
pub use forecast::{
    ar2_forecast, ar2_root_modulus, futures_lm_forecast, rmsre, ForecastReport, UNIT_ROOT_FLAG,
};
pub use gjr::{gjr_fit, gjr_forecast, gjr_loglik, gjr_rolling, gjr_simulate, gjr_variances, GjrFit, GjrParams};
pub use regression::{futures_r2_surface, ols, surface_argmax, CutSeries, OlsFit, SurfaceCell, MIN_CELL_DAYS};
