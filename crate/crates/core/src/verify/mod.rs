//! Forecast verification: latitude-weighted RMSE, anomaly correlation,
//! tercile categories with the Heidke skill score, and run reports.

mod categorical;
mod metrics;
mod region;
mod report;

pub use categorical::{categorize, hss, Category, ContingencyTable};
pub use metrics::{acc, rmse};
pub use region::{RegionDef, RegionKind, RegionMask, Surface};
pub use report::{
    coarsen_values, score_run, CategoryGridFile, ForecastSet, RegionInfo, ScoreContext, ScoreReport, ScoreRow,
};
