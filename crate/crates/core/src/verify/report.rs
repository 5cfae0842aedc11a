//! Scoring whole forecast runs and writing the tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::categorical::{categorize, Category, ContingencyTable};
use super::metrics::{acc, rmse};
use super::region::RegionMask;
use crate::data::{ClimatologyTable, GridSpec, MonthlyField, Stamp};
use crate::error::{DuneError, Result};

/// Anomaly forecasts (K) of one method at one lead.
#[derive(Clone, Debug)]
pub struct ForecastSet {
    pub method: String,
    /// Lead in steps from 1, or the window length for moving-window
    /// forecasts whose leads run 1..=W.
    pub horizon: usize,
    pub fields: Vec<MonthlyField>,
}

/// Climatologies used while scoring.
#[derive(Clone, Copy, Debug)]
pub struct ScoreContext<'a> {
    /// Base of the anomalies; anomaly + mean gives absolute temperature.
    pub climatology: &'a ClimatologyTable,
    /// Reference for ACC anomalies; defaults to `climatology`.
    pub acc_climatology: Option<&'a ClimatologyTable>,
    /// Tercile thresholds for HSS; HSS is skipped without them.
    pub percentiles: Option<&'a ClimatologyTable>,
    /// Block factor for categorizing on a coarser grid (1 = native).
    pub hss_coarsen: usize,
}

impl<'a> ScoreContext<'a> {
    pub fn new(climatology: &'a ClimatologyTable) -> Self {
        Self {
            climatology,
            acc_climatology: None,
            percentiles: None,
            hss_coarsen: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub method: String,
    pub region: String,
    pub horizon: usize,
    /// `None` on the aggregate row.
    pub stamp: Option<Stamp>,
    pub rmse: f64,
    pub acc: f64,
    pub hss: Option<f64>,
    pub contingency: Option<ContingencyTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionInfo {
    pub name: String,
    pub definition: String,
    pub cells: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub regions: Vec<RegionInfo>,
    pub rows: Vec<ScoreRow>,
}

fn absolute(anom: &[f32], clim: &ClimatologyTable, stamp: Stamp) -> Vec<f32> {
    anom.iter().zip(clim.mean(stamp.slot())).map(|(a, m)| a + m).collect()
}

fn reanomalize(abs: &[f32], clim: &ClimatologyTable, stamp: Stamp) -> Vec<f32> {
    abs.iter().zip(clim.mean(stamp.slot())).map(|(a, m)| a - m).collect()
}

/// Block mean by `factor` in both directions, ignoring non-finite cells.
pub fn coarsen_values(values: &[f32], grid: &GridSpec, factor: usize) -> Result<Vec<f32>> {
    if factor == 0 || !grid.n_lat().is_multiple_of(factor) || !grid.n_lon().is_multiple_of(factor) {
        return Err(DuneError::InvalidGrid(format!(
            "{}x{} is not divisible by {factor}",
            grid.n_lat(),
            grid.n_lon()
        )));
    }
    let (nl, nk) = (grid.n_lat() / factor, grid.n_lon() / factor);
    let mut out = Vec::with_capacity(nl * nk);
    for j in 0..nl {
        for k in 0..nk {
            let mut sum = 0.0f64;
            let mut n = 0usize;
            for dj in 0..factor {
                for dk in 0..factor {
                    let v = values[grid.index(j * factor + dj, k * factor + dk)];
                    if v.is_finite() {
                        sum += v as f64;
                        n += 1;
                    }
                }
            }
            out.push(if n == 0 { f32::NAN } else { (sum / n as f64) as f32 });
        }
    }
    Ok(out)
}

/// Region mask on the coarse grid: a block is included when most of its
/// cells are.
fn coarsen_mask(region: &RegionMask, grid: &GridSpec, factor: usize) -> Result<RegionMask> {
    let as_f32: Vec<f32> = region.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let mask = coarsen_values(&as_f32, grid, factor)?
        .into_iter()
        .map(|v| v > 0.5)
        .collect();
    RegionMask::new(
        region.name.clone(),
        mask,
        format!("{} (blocks of {factor}x{factor})", region.definition),
    )
}

struct StampScore {
    rmse: f64,
    acc: f64,
    table: Option<ContingencyTable>,
}

/// Per-stamp and aggregate RMSE, ACC and (with percentiles) HSS for each
/// region. Every forecast stamp must have a truth field on the same grid.
pub fn score_run(
    forecasts: &ForecastSet,
    truth: &[MonthlyField],
    regions: &[RegionMask],
    ctx: &ScoreContext<'_>,
) -> Result<ScoreReport> {
    let by_stamp: BTreeMap<Stamp, &MonthlyField> = truth
        .iter()
        .map(|f| Ok((f.stamp_or_err()?, f)))
        .collect::<Result<_>>()?;
    let Some(first) = forecasts.fields.first() else {
        return Err(DuneError::InvalidArgument(format!(
            "no forecasts for `{}`",
            forecasts.method
        )));
    };
    let grid: Arc<GridSpec> = first.grid.clone();
    let weights = grid.latitude_weights();
    ctx.climatology.grid().ensure_same(&grid, "climatology")?;
    let acc_clim = ctx.acc_climatology.unwrap_or(ctx.climatology);
    acc_clim.grid().ensure_same(&grid, "ACC climatology")?;
    if let Some(p) = ctx.percentiles {
        p.grid().ensure_same(&grid, "percentile table")?;
        if !p.has_percentiles() {
            return Err(DuneError::InvalidArgument("percentile table has no percentiles".into()));
        }
    }
    let coarse_grid = (ctx.hss_coarsen > 1)
        .then(|| grid.coarsened(ctx.hss_coarsen))
        .transpose()?;
    let coarse_regions = match &coarse_grid {
        Some(_) => Some(
            regions
                .iter()
                .map(|r| coarsen_mask(r, &grid, ctx.hss_coarsen))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    for r in regions {
        if r.mask.len() != grid.len() {
            return Err(DuneError::GridMismatch(format!(
                "region `{}` is on another grid",
                r.name
            )));
        }
    }

    let per_stamp: Vec<(Stamp, Vec<StampScore>)> = forecasts
        .fields
        .par_iter()
        .map(|f| {
            let stamp = f.stamp_or_err()?;
            let t = by_stamp.get(&stamp).ok_or(DuneError::MissingStamp(stamp))?;
            grid.ensure_same(&f.grid, "forecast")?;
            grid.ensure_same(&t.grid, "truth")?;
            let f_abs = absolute(&f.values, ctx.climatology, stamp);
            let t_abs = absolute(&t.values, ctx.climatology, stamp);
            let (f_acc, t_acc) = if std::ptr::eq(acc_clim, ctx.climatology) {
                (f.values.clone(), t.values.clone())
            } else {
                (
                    reanomalize(&f_abs, acc_clim, stamp),
                    reanomalize(&t_abs, acc_clim, stamp),
                )
            };
            let cats = match ctx.percentiles {
                Some(p) => {
                    let (lo, hi) = (
                        p.p33(stamp.slot()).expect("checked"),
                        p.p66(stamp.slot()).expect("checked"),
                    );
                    Some(match &coarse_grid {
                        None => (categorize(&f_abs, lo, hi)?, categorize(&t_abs, lo, hi)?),
                        Some(_) => {
                            let c = |v: &[f32]| coarsen_values(v, &grid, ctx.hss_coarsen);
                            let (lo, hi) = (c(lo)?, c(hi)?);
                            (categorize(&c(&f_abs)?, &lo, &hi)?, categorize(&c(&t_abs)?, &lo, &hi)?)
                        }
                    })
                }
                None => None,
            };
            let scores = regions
                .iter()
                .enumerate()
                .map(|(ri, r)| {
                    let table = match &cats {
                        Some((fc, oc)) => {
                            let region = coarse_regions.as_ref().map_or(r, |c| &c[ri]);
                            Some(ContingencyTable::from_categories(fc, oc, region)?)
                        }
                        None => None,
                    };
                    Ok(StampScore {
                        rmse: rmse(&f.values, &t.values, &weights, r)?,
                        acc: acc(&f_acc, &t_acc, &weights, r)?,
                        table,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((stamp, scores))
        })
        .collect::<Result<_>>()?;

    let mut report = ScoreReport {
        regions: regions
            .iter()
            .map(|r| RegionInfo {
                name: r.name.clone(),
                definition: r.definition.clone(),
                cells: r.count(),
            })
            .collect(),
        rows: Vec::new(),
    };
    for (ri, r) in regions.iter().enumerate() {
        let mut hss_values = Vec::new();
        let mut total = ContingencyTable::default();
        for (stamp, scores) in &per_stamp {
            let s = &scores[ri];
            let hss = match &s.table {
                Some(t) if t.total > 0 => Some(t.hss()?),
                _ => None,
            };
            if let Some(t) = &s.table {
                total.hits += t.hits;
                total.misses += t.misses;
                total.false_alarms += t.false_alarms;
                total.correct_negatives += t.correct_negatives;
                total.total += t.total;
            }
            hss_values.extend(hss);
            report.rows.push(ScoreRow {
                method: forecasts.method.clone(),
                region: r.name.clone(),
                horizon: forecasts.horizon,
                stamp: Some(*stamp),
                rmse: s.rmse,
                acc: s.acc,
                hss,
                contingency: s.table,
            });
        }
        let n = per_stamp.len() as f64;
        report.rows.push(ScoreRow {
            method: forecasts.method.clone(),
            region: r.name.clone(),
            horizon: forecasts.horizon,
            stamp: None,
            rmse: per_stamp.iter().map(|(_, s)| s[ri].rmse).sum::<f64>() / n,
            acc: per_stamp.iter().map(|(_, s)| s[ri].acc).sum::<f64>() / n,
            hss: (!hss_values.is_empty()).then(|| hss_values.iter().sum::<f64>() / hss_values.len() as f64),
            contingency: ctx.percentiles.map(|_| total),
        });
    }
    Ok(report)
}

impl ScoreReport {
    pub fn merge(&mut self, other: ScoreReport) {
        for r in other.regions {
            if !self.regions.iter().any(|x| x.name == r.name) {
                self.regions.push(r);
            }
        }
        self.rows.extend(other.rows);
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &ScoreRow> {
        self.rows.iter().filter(|r| r.stamp.is_none())
    }

    /// Aggregate row for `(method, region, horizon)`.
    pub fn aggregate(&self, method: &str, region: &str, horizon: usize) -> Option<&ScoreRow> {
        self.aggregates()
            .find(|r| r.method == method && r.region == region && r.horizon == horizon)
    }

    /// Comma-separated rows; the aggregate row has `stamp = mean`.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("method,region,horizon,stamp,rmse,acc,hss,hits,misses,false_alarms,correct_negatives,total\n");
        for r in &self.rows {
            let stamp = r.stamp.map_or("mean".to_string(), |s| s.to_string());
            let hss = r.hss.map_or(String::new(), |v| format!("{v:.6}"));
            let c = r.contingency.map_or(",,,,".to_string(), |c| {
                format!(
                    "{},{},{},{},{}",
                    c.hits, c.misses, c.false_alarms, c.correct_negatives, c.total
                )
            });
            let _ = writeln!(
                s,
                "{},{},{},{stamp},{:.6},{:.6},{hss},{c}",
                r.method, r.region, r.horizon, r.rmse, r.acc
            );
        }
        s
    }

    /// Methods as rows, regions as column groups of RMSE / ACC / HSS.
    pub fn table(&self) -> String {
        let mut methods: Vec<(String, usize)> = Vec::new();
        for r in self.aggregates() {
            if !methods.iter().any(|(m, h)| *m == r.method && *h == r.horizon) {
                methods.push((r.method.clone(), r.horizon));
            }
        }
        let mut s = String::from("| method | horizon |");
        for reg in &self.regions {
            let _ = write!(s, " {0} RMSE | {0} ACC | {0} HSS |", reg.name);
        }
        s.push('\n');
        s.push_str("|---|---|");
        s.push_str(&"---|---|---|".repeat(self.regions.len()));
        s.push('\n');
        for (m, h) in &methods {
            let _ = write!(s, "| {m} | {h} |");
            for reg in &self.regions {
                match self.aggregate(m, &reg.name, *h) {
                    Some(r) => {
                        let hss = r.hss.map_or("-".to_string(), |v| format!("{v:.2}"));
                        let _ = write!(s, " {:.3} | {:.3} | {hss} |", r.rmse, r.acc);
                    }
                    None => s.push_str(" - | - | - |"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Writes `scores.csv`, `summary.json` and `table.md` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("scores.csv"), self.to_csv())?;
        fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(self)?)?;
        fs::write(dir.join("table.md"), self.table())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| DuneError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Category grid exchanged with external categorical forecasts: one
/// string of `B`/`N`/`A`/`.` codes per latitude row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryGridFile {
    pub stamp: Stamp,
    pub grid: GridSpec,
    pub rows: Vec<String>,
}

impl CategoryGridFile {
    pub fn new(stamp: Stamp, grid: &GridSpec, cats: &[Category]) -> Result<Self> {
        if cats.len() != grid.len() {
            return Err(DuneError::Shape(format!(
                "{} categories for a {}-cell grid",
                cats.len(),
                grid.len()
            )));
        }
        let rows = cats
            .chunks(grid.n_lon())
            .map(|row| row.iter().map(|c| c.code()).collect())
            .collect();
        Ok(Self {
            stamp,
            grid: grid.clone(),
            rows,
        })
    }

    pub fn categories(&self) -> Result<Vec<Category>> {
        if self.rows.len() != self.grid.n_lat() || self.rows.iter().any(|r| r.chars().count() != self.grid.n_lon()) {
            return Err(DuneError::Shape("category rows do not match the grid".into()));
        }
        self.rows
            .iter()
            .flat_map(|r| r.chars())
            .map(Category::from_code)
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| DuneError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_climatology, VariableId};

    fn series(
        grid: &Arc<GridSpec>,
        years: std::ops::RangeInclusive<i32>,
        f: impl Fn(i32, u8, usize) -> f32,
    ) -> Vec<MonthlyField> {
        let mut out = Vec::new();
        for y in years {
            for m in 1..=12u8 {
                let v = (0..grid.len()).map(|i| f(y, m, i)).collect();
                out.push(MonthlyField::new(VariableId::BlendedT, Some(Stamp::month(y, m)), grid.clone(), v).unwrap());
            }
        }
        out
    }

    #[test]
    fn truth_as_forecast_is_perfect() {
        let grid = Arc::new(GridSpec::regular(4, 8).unwrap());
        let abs = series(&grid, 1990..=1999, |y, m, i| {
            280.0 + m as f32 + ((y as usize * 31 + i * 7) % 11) as f32 * 0.3
        });
        let clim = build_climatology(&abs, (1990, 1999), true).unwrap();
        let anoms: Vec<MonthlyField> = abs.iter().map(|f| crate::data::anomalize(f, &clim).unwrap()).collect();
        let test: Vec<MonthlyField> = anoms[anoms.len() - 24..].to_vec();
        let fs = ForecastSet {
            method: "truth".into(),
            horizon: 1,
            fields: test.clone(),
        };
        let ctx = ScoreContext {
            percentiles: Some(&clim),
            ..ScoreContext::new(&clim)
        };
        let report = score_run(&fs, &anoms, &[RegionMask::global(&grid)], &ctx).unwrap();
        assert_eq!(report.rows.len(), 25);
        for r in &report.rows {
            assert_eq!(r.rmse, 0.0);
            assert!((r.acc - 1.0).abs() < 1e-12);
            assert_eq!(r.hss, Some(100.0));
        }
    }

    #[test]
    fn missing_truth_stamp() {
        let grid = Arc::new(GridSpec::regular(2, 4).unwrap());
        let a = series(&grid, 2000..=2000, |_, _, _| 0.0);
        let clim = build_climatology(&a, (2000, 2000), false).unwrap();
        let f = series(&grid, 2001..=2001, |_, _, _| 0.0);
        let fs = ForecastSet {
            method: "x".into(),
            horizon: 1,
            fields: f,
        };
        assert!(matches!(
            score_run(&fs, &a, &[RegionMask::global(&grid)], &ScoreContext::new(&clim)),
            Err(DuneError::MissingStamp(_))
        ));
    }

    #[test]
    fn category_file_round_trip() {
        let grid = GridSpec::regular(2, 3).unwrap();
        let cats = vec![
            Category::Below,
            Category::Near,
            Category::Above,
            Category::Invalid,
            Category::Near,
            Category::Below,
        ];
        let f = CategoryGridFile::new(Stamp::month(2020, 5), &grid, &cats).unwrap();
        assert_eq!(f.rows, vec!["BNA", ".NB"]);
        assert_eq!(f.categories().unwrap(), cats);
    }
}
