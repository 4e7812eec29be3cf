//! k-medoids (PAM) on forest dissimilarities, silhouette widths and the
//! sweep over the number of clusters.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// `d(i, j) = sqrt(1 - prox(i, j))` with an exact zero diagonal.
pub fn dissimilarity_from_proximity(prox: &SquareMatrix) -> Result<SquareMatrix> {
    let n = prox.size();
    for i in 0..n {
        for j in 0..n {
            let v = prox.get(i, j);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProximity { row: i, col: j, value: v });
            }
        }
    }
    Ok(SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            (1.0 - prox.get(i, j)).sqrt()
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// One width per object, in `[-1, 1]`.
    pub widths: Vec<f64>,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    /// Cluster id per object; cluster `c` has medoid `medoids[c]`.
    pub assignments: Vec<usize>,
    /// Medoid object indices in ascending order.
    pub medoids: Vec<usize>,
    /// Total dissimilarity of objects to their medoids.
    pub cost: f64,
    /// Objective after BUILD and after every accepted SWAP.
    pub cost_trace: Vec<f64>,
    pub silhouette: Option<Silhouette>,
}

fn check_square(d: &SquareMatrix, k: usize) -> Result<usize> {
    let n = d.size();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(n)
}

/// Nearest and second-nearest medoid distance for every object.
fn nearest_two(d: &SquareMatrix, medoids: &[usize]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = d.size();
    let mut nearest = vec![0; n];
    let mut d1 = vec![f64::INFINITY; n];
    let mut d2 = vec![f64::INFINITY; n];
    for j in 0..n {
        for (m, &med) in medoids.iter().enumerate() {
            let v = d.get(med, j);
            if v < d1[j] {
                d2[j] = d1[j];
                d1[j] = v;
                nearest[j] = m;
            } else if v < d2[j] {
                d2[j] = v;
            }
        }
    }
    (nearest, d1, d2)
}

/// Partitioning Around Medoids: greedy BUILD, then steepest-descent SWAP
/// until no swap lowers the objective. Exactly tied best swaps are broken
/// with a generator seeded by `seed`.
pub fn pam(d: &SquareMatrix, k: usize, seed: u64) -> Result<ClusterResult> {
    let n = check_square(d, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // BUILD
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    for _ in 0..k {
        let gain = |c: usize| -> f64 {
            if medoids.is_empty() {
                -(0..n).map(|j| d.get(c, j)).sum::<f64>()
            } else {
                (0..n).map(|j| (dist[j] - d.get(c, j)).max(0.0)).sum()
            }
        };
        let mut best = None::<(usize, f64)>;
        for c in (0..n).filter(|&c| !is_medoid[c]) {
            let g = gain(c);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((c, g));
            }
        }
        let (c, _) = best.expect("k <= n leaves a candidate");
        medoids.push(c);
        is_medoid[c] = true;
        for j in 0..n {
            dist[j] = dist[j].min(d.get(c, j));
        }
    }
    let mut cost: f64 = dist.iter().sum();
    let mut trace = vec![cost];

    // SWAP
    loop {
        let (nearest, d1, d2) = nearest_two(d, &medoids);
        let candidates: Vec<(usize, usize)> = (0..k)
            .flat_map(|m| (0..n).filter(|&o| !is_medoid[o]).map(move |o| (m, o)))
            .collect();
        let deltas: Vec<f64> = candidates
            .par_iter()
            .map(|&(m, o)| {
                (0..n)
                    .map(|j| {
                        let to_new = d.get(o, j);
                        let after = if nearest[j] == m {
                            to_new.min(d2[j])
                        } else {
                            to_new.min(d1[j])
                        };
                        after - d1[j]
                    })
                    .sum()
            })
            .collect();
        let best = deltas.iter().copied().fold(f64::INFINITY, f64::min);
        if !(best < -1e-12 * (1.0 + cost.abs())) {
            break;
        }
        let tied: Vec<usize> = (0..deltas.len()).filter(|&i| deltas[i] == best).collect();
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.gen_range(0..tied.len())]
        };
        let (m, o) = candidates[pick];
        is_medoid[medoids[m]] = false;
        is_medoid[o] = true;
        medoids[m] = o;
        let (_, d1, _) = nearest_two(d, &medoids);
        cost = d1.iter().sum();
        trace.push(cost);
    }

    medoids.sort_unstable();
    let assignments = assign(d, &medoids);
    Ok(ClusterResult {
        k,
        assignments,
        medoids,
        cost,
        cost_trace: trace,
        silhouette: None,
    })
}

/// Nearest medoid per object, lowest cluster id on ties; medoids always
/// belong to their own cluster.
fn assign(d: &SquareMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..d.size())
        .map(|j| {
            if let Some(c) = medoids.iter().position(|&m| m == j) {
                return c;
            }
            let mut best = 0;
            for c in 1..medoids.len() {
                if d.get(medoids[c], j) < d.get(medoids[best], j) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Total dissimilarity of every object to its nearest medoid in `medoids`.
pub fn medoid_cost(d: &SquareMatrix, medoids: &[usize]) -> f64 {
    (0..d.size())
        .map(|j| medoids.iter().map(|&m| d.get(m, j)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Silhouette width per object. Singleton-cluster members get 0.
pub fn silhouette(d: &SquareMatrix, assignments: &[usize]) -> Result<Silhouette> {
    let n = d.size();
    if assignments.len() != n {
        return Err(Error::ColumnMismatch {
            expected: n,
            got: assignments.len(),
        });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in assignments.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let widths: Vec<f64> = (0..n)
        .map(|i| {
            let own = assignments[i];
            if members[&own].len() == 1 {
                return 0.0;
            }
            let mean_to = |objs: &[usize], exclude_self: bool| {
                let sum: f64 = objs.iter().map(|&j| d.get(i, j)).sum();
                let count = objs.len() - usize::from(exclude_self);
                sum / count as f64
            };
            let a = mean_to(&members[&own], true);
            let b = members
                .iter()
                .filter(|(c, _)| **c != own)
                .map(|(_, objs)| mean_to(objs, false))
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                ((b - a) / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let average = widths.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { widths, average })
}

/// PAM followed by silhouette widths (`k >= 2`).
pub fn cluster(d: &SquareMatrix, k: usize, seed: u64) -> Result<ClusterResult> {
    let mut res = pam(d, k, seed)?;
    res.silhouette = Some(silhouette(d, &res.assignments)?);
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub k: usize,
    pub average_width: f64,
    /// 1 = largest average width; ties favour the smaller k.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Entries in ascending k.
    pub entries: Vec<SweepEntry>,
    pub optimal_k: usize,
    pub results: Vec<ClusterResult>,
}

pub const DEFAULT_K_SWEEP: [usize; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];

pub fn sweep_k(d: &SquareMatrix, k_values: &[usize], seed: u64) -> Result<SweepResult> {
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InvalidConfig("empty k sweep".into()));
    }
    let results = ks
        .iter()
        .map(|&k| cluster(d, k, seed))
        .collect::<Result<Vec<_>>>()?;
    let widths: Vec<f64> = results
        .iter()
        .map(|r| r.silhouette.as_ref().map(|s| s.average).unwrap_or(f64::NAN))
        .collect();
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| widths[b].total_cmp(&widths[a]).then(a.cmp(&b)));
    let mut entries: Vec<SweepEntry> = ks
        .iter()
        .zip(&widths)
        .map(|(&k, &w)| SweepEntry {
            k,
            average_width: w,
            rank: 0,
        })
        .collect();
    for (pos, &i) in order.iter().enumerate() {
        entries[i].rank = pos + 1;
    }
    Ok(SweepResult {
        optimal_k: ks[order[0]],
        entries,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_matrix(points: &[(f64, f64)]) -> SquareMatrix {
        SquareMatrix::from_fn(points.len(), |i, j| {
            let (a, b) = (points[i], points[j]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
    }

    fn blobs() -> (SquareMatrix, Vec<usize>) {
        let mut pts = vec![];
        let mut labels = vec![];
        for i in 0..20 {
            let (cx, lab) = if i < 10 { (0.0, 0) } else { (50.0, 1) };
            let jitter = ((i * 7919) % 13) as f64 / 13.0;
            pts.push((cx + jitter, ((i * 31) % 7) as f64 / 7.0));
            labels.push(lab);
        }
        (points_matrix(&pts), labels)
    }

    #[test]
    fn dissimilarity_transform() {
        let p = SquareMatrix::from_rows(&[vec![1.0, 0.75, 0.0], vec![0.75, 1.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let d = dissimilarity_from_proximity(&p).unwrap();
        assert_eq!(d.get(0, 1), 0.5);
        assert_eq!(d.get(0, 2), 1.0);
        assert_eq!(d.get(1, 2), 0.0);
        let bad = SquareMatrix::from_rows(&[vec![1.0, 1.2], vec![1.2, 1.0]]).unwrap();
        assert!(matches!(dissimilarity_from_proximity(&bad), Err(Error::InvalidProximity { .. })));
    }

    #[test]
    fn k_one_is_global_minimum() {
        let (d, _) = blobs();
        let r = pam(&d, 1, 0).unwrap();
        let best = (0..20)
            .map(|c| medoid_cost(&d, &[c]))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.cost, best);
    }

    #[test]
    fn k_equals_n_costs_nothing() {
        let (d, _) = blobs();
        let r = pam(&d, 20, 0).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.medoids, (0..20).collect::<Vec<_>>());
        assert!(matches!(pam(&d, 21, 0), Err(Error::KTooLarge { k: 21, n: 20 })));
    }

    #[test]
    fn planted_blobs_recovered() {
        let (d, labels) = blobs();
        let r = pam(&d, 2, 0).unwrap();
        let same = r.assignments.iter().zip(&labels).all(|(a, l)| a == l);
        let flipped = r.assignments.iter().zip(&labels).all(|(a, l)| *a != *l);
        assert!(same || flipped);
        let mut best = f64::INFINITY;
        for a in 0..20 {
            for b in a + 1..20 {
                best = best.min(medoid_cost(&d, &[a, b]));
            }
        }
        assert!((r.cost - best).abs() < 1e-9);
        let s = silhouette(&d, &r.assignments).unwrap();
        assert!(s.average > 0.9);
        assert_eq!(sweep_k(&d, &DEFAULT_K_SWEEP, 0).unwrap().optimal_k, 2);
    }

    #[test]
    fn silhouette_conventions() {
        // Object 0 sits at mean distance 2 from its own cluster and from the other.
        let d = SquareMatrix::from_rows(&[
            vec![0.0, 2.0, 2.0, 2.0],
            vec![2.0, 0.0, 5.0, 5.0],
            vec![2.0, 5.0, 0.0, 1.0],
            vec![2.0, 5.0, 1.0, 0.0],
        ])
        .unwrap();
        let s = silhouette(&d, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.widths[0], 0.0);
        let single = silhouette(&d, &[0, 1, 1, 1]).unwrap();
        assert_eq!(single.widths[0], 0.0);
        assert_eq!(silhouette(&d, &[3, 3, 3, 3]), Err(Error::SingleCluster));
    }

    #[test]
    fn sweep_ranks_are_a_permutation() {
        let (d, _) = blobs();
        let s = sweep_k(&d, &[5, 2, 3, 4], 1).unwrap();
        let mut ranks: Vec<usize> = s.entries.iter().map(|e| e.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
        assert_eq!(s.entries[0].k, 2);
    }
}
