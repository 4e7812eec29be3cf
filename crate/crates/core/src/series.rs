//! Time-series representation, standardization, differencing and
//! temporal aggregation to coarser resolutions.

use chrono::{Datelike, Duration, NaiveDate};

use crate::error::{Error, Result};
use crate::stats;

/// A gap-free, uniformly sampled series anchored at a calendar date.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_date: NaiveDate,
    resolution_name: String,
}

impl TimeSeries {
    /// Builds a series, rejecting NaN and infinite values.
    pub fn new(
        values: Vec<f64>,
        start_date: NaiveDate,
        resolution_name: impl Into<String>,
    ) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self {
            values,
            start_date,
            resolution_name: resolution_name.into(),
        })
    }

    /// A daily series under the base resolution name.
    pub fn daily(values: Vec<f64>, start_date: NaiveDate) -> Result<Self> {
        Self::new(values, start_date, BASE_RESOLUTION)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn resolution_name(&self) -> &str {
        &self.resolution_name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            start_date: self.start_date,
            resolution_name: self.resolution_name.clone(),
        }
    }
}

pub const BASE_RESOLUTION: &str = "1-day";

/// How source samples are grouped into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationRule {
    /// Consecutive blocks of `width` source samples starting at the first one.
    FixedBlock(usize),
    /// Calendar days 1-15 and 16-end of each month.
    SemiMonth,
    /// Groups of `m` calendar months aligned to January; `m` divides 12.
    CalendarMonths(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Sum,
    Mean,
}

impl Statistic {
    fn apply(self, block: &[f64]) -> f64 {
        let sum: f64 = block.iter().sum();
        match self {
            Statistic::Sum => sum,
            Statistic::Mean => sum / block.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionSpec {
    pub name: String,
    pub rule: AggregationRule,
    pub statistic: Statistic,
    /// Number of seasons per year.
    pub frequency: usize,
}

impl ResolutionSpec {
    pub fn new(
        name: impl Into<String>,
        rule: AggregationRule,
        statistic: Statistic,
        frequency: usize,
    ) -> Result<Self> {
        let name = name.into();
        if frequency < 2 {
            return Err(Error::FrequencyTooSmall(frequency));
        }
        match rule {
            AggregationRule::FixedBlock(0) => {
                return Err(Error::InvalidConfig(format!(
                    "resolution {name}: block width must be at least 1"
                )))
            }
            AggregationRule::CalendarMonths(m) if ![1, 2, 3, 4, 6, 12].contains(&m) => {
                return Err(Error::InvalidConfig(format!(
                    "resolution {name}: month group {m} does not divide a year"
                )))
            }
            _ => {}
        }
        Ok(Self {
            name,
            rule,
            statistic,
            frequency,
        })
    }

    pub fn with_statistic(&self, statistic: Statistic) -> Self {
        Self {
            statistic,
            ..self.clone()
        }
    }
}

/// The nine resolutions from 1 day to 6 months with their seasonal frequencies.
pub fn default_resolutions(statistic: Statistic) -> Vec<ResolutionSpec> {
    use AggregationRule::*;
    let table: [(&str, AggregationRule, usize); 9] = [
        ("1-day", FixedBlock(1), 365),
        ("2-day", FixedBlock(2), 182),
        ("3-day", FixedBlock(3), 121),
        ("7-day", FixedBlock(7), 52),
        ("0.5-month", SemiMonth, 24),
        ("1-month", CalendarMonths(1), 12),
        ("2-month", CalendarMonths(2), 6),
        ("3-month", CalendarMonths(3), 4),
        ("6-month", CalendarMonths(6), 2),
    ];
    table
        .into_iter()
        .map(|(name, rule, frequency)| ResolutionSpec {
            name: name.to_string(),
            rule,
            statistic,
            frequency,
        })
        .collect()
}

/// Scales to mean 0 and sample standard deviation 1.
pub fn standardize(series: &TimeSeries) -> Result<TimeSeries> {
    Ok(series.with_values(standardize_values(series.values())?))
}

pub fn standardize_values(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    if stats::is_constant(values) {
        return Err(Error::ZeroVariance);
    }
    let m = stats::mean(values);
    let sd = stats::sample_sd(values);
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// Repeated lag-1 differencing. The output keeps the input's start date.
pub fn difference(series: &TimeSeries, order: usize) -> Result<TimeSeries> {
    Ok(series.with_values(difference_values(series.values(), order)?))
}

pub fn difference_values(values: &[f64], order: usize) -> Result<Vec<f64>> {
    if values.len() <= order {
        return Err(Error::TooShort {
            needed: order + 1,
            got: values.len(),
        });
    }
    let mut out = values.to_vec();
    for _ in 0..order {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Aggregates a daily series into complete blocks of `spec`. Incomplete
/// leading or trailing blocks are dropped.
pub fn aggregate(series: &TimeSeries, spec: &ResolutionSpec) -> Result<TimeSeries> {
    let values = series.values();
    let (out, start_date) = match spec.rule {
        AggregationRule::FixedBlock(width) => {
            if width == 0 {
                return Err(Error::InvalidConfig("block width 0".into()));
            }
            let out: Vec<f64> = values
                .chunks_exact(width)
                .map(|b| spec.statistic.apply(b))
                .collect();
            (out, series.start_date())
        }
        AggregationRule::SemiMonth => calendar_blocks(series, spec.statistic, semi_month_block)?,
        AggregationRule::CalendarMonths(m) => {
            calendar_blocks(series, spec.statistic, |d| month_group_block(d, m))?
        }
    };
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    TimeSeries::new(out, start_date, spec.name.clone())
}

/// First and last day of the half-month containing `date`.
fn semi_month_block(date: NaiveDate) -> (NaiveDate, NaiveDate) {
    let (y, m) = (date.year(), date.month());
    if date.day() <= 15 {
        (ymd(y, m, 1), ymd(y, m, 15))
    } else {
        (ymd(y, m, 16), last_day_of_month(y, m))
    }
}

/// First and last day of the January-aligned group of `m` months containing `date`.
fn month_group_block(date: NaiveDate, m: u32) -> (NaiveDate, NaiveDate) {
    let y = date.year();
    let first_month = (date.month0() / m) * m + 1;
    let last_month = first_month + m - 1;
    (ymd(y, first_month, 1), last_day_of_month(y, last_month))
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

fn last_day_of_month(y: i32, m: u32) -> NaiveDate {
    let next = if m == 12 { ymd(y + 1, 1, 1) } else { ymd(y, m + 1, 1) };
    next - Duration::days(1)
}

fn calendar_blocks(
    series: &TimeSeries,
    statistic: Statistic,
    block_of: impl Fn(NaiveDate) -> (NaiveDate, NaiveDate),
) -> Result<(Vec<f64>, NaiveDate)> {
    let values = series.values();
    let start = series.start_date();
    let mut out = Vec::new();
    let mut first_start = None;
    let mut i = 0usize;
    while i < values.len() {
        let date = start + Duration::days(i as i64);
        let (block_start, block_end) = block_of(date);
        let block_len = (block_end - block_start).num_days() as usize + 1;
        let offset = (date - block_start).num_days() as usize;
        let remaining = block_len - offset;
        if offset == 0 && i + block_len <= values.len() {
            out.push(statistic.apply(&values[i..i + block_len]));
            first_start.get_or_insert(block_start);
        }
        i += remaining;
    }
    Ok((out, first_start.unwrap_or(start)))
}

/// Aggregates `daily` to every spec, in the order given.
pub fn derive_resolutions(daily: &TimeSeries, specs: &[ResolutionSpec]) -> Result<Vec<TimeSeries>> {
    specs.iter().map(|s| aggregate(daily, s)).collect()
}
