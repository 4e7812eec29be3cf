//! Run configuration in a flat `key = value` text format.
//!
//! Recognised keys:
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `seed` | unsigned integer | `0` |
//! | `n_trees` | one of 500, 1000, 2000, 3000, 4000, 5000 | `5000` |
//! | `mtry` | integer in 1..=23 | `2` |
//! | `k_fixed` | integer >= 2 | `4` |
//! | `k_sweep` | comma-separated integers >= 2 | `2,3,4,5,6,7,8,9,10` |
//! | `workers` | integer >= 1 | available parallelism |
//! | `proximity_oob` | `true` / `false` | `false` |
//! | `resolutions` | comma-separated resolution entries | the nine built-ins |
//! | `statistic.<series_type>` | `sum` / `mean` | see below |
//!
//! A resolution entry is a built-in name (`1-day`, `2-day`, `3-day`,
//! `7-day`, `0.5-month`, `1-month`, `2-month`, `3-month`, `6-month`) or
//! `name:rule:frequency` where `rule` is `days<N>`, `semimonth` or
//! `months<M>`. Series types default to `mean` aggregation except
//! `precipitation` and `streamflow`, which default to `sum`.
//!
//! Blank lines and lines starting with `#` are ignored; unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hydrofeat::clustering::DEFAULT_K_SWEEP;
use hydrofeat::series::{default_resolutions, AggregationRule, ResolutionSpec, Statistic};
use hydrofeat::FEATURE_COUNT;

use crate::error::{CliError, Result};

pub const TREE_PRESETS: [usize; 6] = [500, 1000, 2000, 3000, 4000, 5000];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Resolution specs; the statistic stored here is replaced per series type.
    pub resolutions: Vec<ResolutionSpec>,
    pub n_trees: usize,
    pub mtry: usize,
    pub k_fixed: usize,
    pub k_sweep: Vec<usize>,
    pub seed: u64,
    /// Explicit per-type aggregation statistics.
    pub statistics: BTreeMap<String, Statistic>,
    pub workers: usize,
    pub proximity_oob: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolutions: default_resolutions(Statistic::Mean),
            n_trees: 5000,
            mtry: 2,
            k_fixed: 4,
            k_sweep: DEFAULT_K_SWEEP.to_vec(),
            seed: 0,
            statistics: BTreeMap::new(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            proximity_oob: false,
        }
    }
}

fn builtin(name: &str) -> Option<ResolutionSpec> {
    default_resolutions(Statistic::Mean)
        .into_iter()
        .find(|s| s.name == name)
}

fn parse_resolution(entry: &str) -> Result<ResolutionSpec> {
    if let Some(spec) = builtin(entry) {
        return Ok(spec);
    }
    let parts: Vec<&str> = entry.split(':').collect();
    let bad = || CliError::Config(format!("unknown resolution {entry:?}"));
    let [name, rule, frequency] = parts[..] else {
        return Err(bad());
    };
    let rule = if rule == "semimonth" {
        AggregationRule::SemiMonth
    } else if let Some(n) = rule.strip_prefix("days") {
        AggregationRule::FixedBlock(n.parse().map_err(|_| bad())?)
    } else if let Some(m) = rule.strip_prefix("months") {
        AggregationRule::CalendarMonths(m.parse().map_err(|_| bad())?)
    } else {
        return Err(bad());
    };
    let frequency = frequency.parse().map_err(|_| bad())?;
    ResolutionSpec::new(name, rule, Statistic::Mean, frequency).map_err(|e| CliError::Config(e.to_string()))
}

fn format_resolution(spec: &ResolutionSpec) -> String {
    if builtin(&spec.name).is_some_and(|b| b.rule == spec.rule && b.frequency == spec.frequency) {
        return spec.name.clone();
    }
    let rule = match spec.rule {
        AggregationRule::FixedBlock(w) => format!("days{w}"),
        AggregationRule::SemiMonth => "semimonth".into(),
        AggregationRule::CalendarMonths(m) => format!("months{m}"),
    };
    format!("{}:{}:{}", spec.name, rule, spec.frequency)
}

fn parse_statistic(v: &str) -> Result<Statistic> {
    match v {
        "sum" => Ok(Statistic::Sum),
        "mean" => Ok(Statistic::Mean),
        _ => Err(CliError::Config(format!("statistic must be sum or mean, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "n_trees" => self.n_trees = parse_num(key, value)?,
            "mtry" => self.mtry = parse_num(key, value)?,
            "k_fixed" => self.k_fixed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "proximity_oob" => self.proximity_oob = parse_num(key, value)?,
            "k_sweep" => {
                self.k_sweep = value
                    .split(',')
                    .map(|v| parse_num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "resolutions" => {
                self.resolutions = value
                    .split(',')
                    .map(|v| parse_resolution(v.trim()))
                    .collect::<Result<_>>()?
            }
            _ => match key.strip_prefix("statistic.") {
                Some(t) if !t.is_empty() => {
                    self.statistics.insert(t.to_string(), parse_statistic(value)?);
                }
                _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if !TREE_PRESETS.contains(&self.n_trees) {
            return fail(format!("n_trees must be one of {TREE_PRESETS:?}, got {}", self.n_trees));
        }
        if self.mtry == 0 || self.mtry > FEATURE_COUNT {
            return fail(format!("mtry must be in 1..={FEATURE_COUNT}"));
        }
        if self.k_fixed < 2 {
            return fail("k_fixed must be at least 2".into());
        }
        if self.k_sweep.is_empty() || self.k_sweep.iter().any(|&k| k < 2) {
            return fail("k_sweep needs values >= 2".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.resolutions.is_empty() {
            return fail("no resolutions configured".into());
        }
        let mut names: Vec<&str> = self.resolutions.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return fail("duplicate resolution names".into());
        }
        Ok(())
    }

    pub fn statistic_for(&self, series_type: &str) -> Statistic {
        self.statistics
            .get(series_type)
            .copied()
            .unwrap_or(match series_type {
                "precipitation" | "streamflow" => Statistic::Sum,
                _ => Statistic::Mean,
            })
    }

    /// Resolution specs with the statistic for `series_type`.
    pub fn resolutions_for(&self, series_type: &str) -> Vec<ResolutionSpec> {
        let stat = self.statistic_for(series_type);
        self.resolutions.iter().map(|r| r.with_statistic(stat)).collect()
    }

    pub fn resolution_names(&self) -> Vec<String> {
        self.resolutions.iter().map(|r| r.name.clone()).collect()
    }

    /// Serializes every setting; `parse` of the output reproduces `self`.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_trees = {}", self.n_trees);
        let _ = writeln!(s, "mtry = {}", self.mtry);
        let _ = writeln!(s, "k_fixed = {}", self.k_fixed);
        let _ = writeln!(s, "k_sweep = {}", join(&self.k_sweep));
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "proximity_oob = {}", self.proximity_oob);
        let res: Vec<String> = self.resolutions.iter().map(format_resolution).collect();
        let _ = writeln!(s, "resolutions = {}", res.join(","));
        for (t, stat) in &self.statistics {
            let v = match stat {
                Statistic::Sum => "sum",
                Statistic::Mean => "mean",
            };
            let _ = writeln!(s, "statistic.{t} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.n_trees, 5000);
        assert_eq!(c.mtry, 2);
        assert_eq!(c.k_fixed, 4);
        assert_eq!(c.k_sweep, vec![2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let f: Vec<usize> = c.resolutions.iter().map(|r| r.frequency).collect();
        assert_eq!(f, vec![365, 182, 121, 52, 24, 12, 6, 4, 2]);
        assert_eq!(c.statistic_for("temperature"), Statistic::Mean);
        assert_eq!(c.statistic_for("streamflow"), Statistic::Sum);
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "# demo\nseed = 42\nn_trees = 500\nk_sweep = 2, 3,5\nresolutions = 1-day,10-day:days10:36,3-month\nstatistic.precipitation = mean\nworkers = 3\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.k_sweep, vec![2, 3, 5]);
        assert_eq!(c.resolutions[1].rule, AggregationRule::FixedBlock(10));
        assert_eq!(c.statistic_for("precipitation"), Statistic::Mean);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(RunConfig::parse("n_trees = 123").is_err());
        assert!(RunConfig::parse("colour = blue").is_err());
        assert!(RunConfig::parse("mtry = 24").is_err());
        assert!(RunConfig::parse("resolutions = 5-day").is_err());
        assert!(RunConfig::parse("seed 4").is_err());
        for preset in TREE_PRESETS {
            assert!(RunConfig::parse(&format!("n_trees = {preset}")).is_ok());
        }
    }
}
