#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use hydrofeat::TimeSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

pub const DESK_LOCATIONS: usize = 40;
pub const DESK_DAYS: usize = 2922;

pub fn desk_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()
}

/// Synthetic daily record for one location. Locations alternate between a
/// maritime and a continental regime so that clusters exist.
pub fn desk_series(location: usize, series_type: &str, days: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + location as u64);
    let continental = location % 2 == 1;
    let phase = rng.gen_range(-0.3..0.3);
    let season = |d: usize| (2.0 * PI * d as f64 / 365.25 + phase).sin();

    let temperature: Vec<f64> = {
        let amp = if continental { 14.0 } else { 5.0 } * rng.gen_range(0.8..1.2);
        let mut e = 0.0;
        (0..days)
            .map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                e = 0.7 * e + 2.0 * z;
                10.0 - amp * season(d + 91) + e
            })
            .collect()
    };
    let precipitation: Vec<f64> = {
        let wet = if continental { 0.25 } else { 0.5 };
        let depth = Exp::new(if continental { 0.15 } else { 0.3 }).unwrap();
        (0..days)
            .map(|d| {
                let p = (wet * (1.0 + 0.6 * season(d))).clamp(0.02, 0.95);
                if rng.gen::<f64>() < p {
                    depth.sample(&mut rng)
                } else {
                    0.0
                }
            })
            .collect()
    };
    match series_type {
        "temperature" => temperature,
        "precipitation" => precipitation,
        "streamflow" => {
            let recession = if continental { 0.8 } else { 0.95 };
            let base = rng.gen_range(0.5..2.0);
            let mut q = base;
            precipitation
                .iter()
                .map(|p| {
                    q = recession * q + (1.0 - recession) * (base + 3.0 * p);
                    q
                })
                .collect()
        }
        other => panic!("unknown series type {other}"),
    }
}

pub const DESK_TYPES: [&str; 3] = ["precipitation", "streamflow", "temperature"];

pub fn location_id(i: usize) -> String {
    format!("L{i:03}")
}

pub fn desk_map(locations: usize) -> BTreeMap<(String, String), TimeSeries> {
    let mut out = BTreeMap::new();
    for i in 0..locations {
        for t in DESK_TYPES {
            let s = TimeSeries::daily(desk_series(i, t, DESK_DAYS), desk_start()).unwrap();
            out.insert((location_id(i), t.to_string()), s);
        }
    }
    out
}

pub fn daily_csv(values: &[f64], start: NaiveDate) -> String {
    let mut s = String::from("date,value\n");
    for (i, v) in values.iter().enumerate() {
        let d = start + chrono::Duration::days(i as i64);
        writeln!(s, "{},{v}", d.format("%Y-%m-%d")).unwrap();
    }
    s
}

/// Writes the desk dataset into `dir` and returns the manifest path.
pub fn write_desk_dataset(dir: &Path, locations: usize) -> PathBuf {
    let mut manifest = String::from("location_id,series_type,path\n");
    for i in 0..locations {
        for t in DESK_TYPES {
            let file = format!("{}_{t}.csv", location_id(i));
            std::fs::write(dir.join(&file), daily_csv(&desk_series(i, t, DESK_DAYS), desk_start())).unwrap();
            writeln!(manifest, "{},{t},{file}", location_id(i)).unwrap();
        }
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Two well-separated blobs of 20 rows each in `p` dimensions.
pub fn planted_blobs(seed: u64, p: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for label in 0..2 {
        for _ in 0..20 {
            let centre = if label == 0 { 0.0 } else { 6.0 };
            rows.push((0..p).map(|_| centre + rng.sample::<f64, _>(StandardNormal)).collect());
            labels.push(label);
        }
    }
    (rows, labels)
}
