//! Gridded data types shared by every stage: grids and latitude weights,
//! time stamps, fields, normalization and climatologies.

mod climatology;
mod field;
mod grid;
mod norm;

pub(crate) use climatology::ClimatologyMeta;
pub use climatology::{
    anomalize, build_climatology, deanomalize, percentile_linear, ClimatologyTable, LOWER_PERCENTILE, UPPER_PERCENTILE,
};
pub use field::{Cadence, MonthlyField, Season, Stamp, VariableId};
pub use grid::{latitude_weights, GridSpec, LatWeights, PoleRow};
pub use norm::{ChannelStats, NormStats};
