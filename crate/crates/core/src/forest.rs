//! Random-forest classifier used in unsupervised mode: real feature rows
//! against a column-wise bootstrap of themselves. Provides leaf-sharing
//! proximities and mean-decrease-Gini importances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const REAL: u8 = 1;
pub const SYNTHETIC: u8 = 0;

/// Two-class training data, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastDataset {
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<u8>,
    n_real: usize,
    seed: u64,
}

impl ContrastDataset {
    /// Arbitrary labelled data (labels 0 or 1). `n_real` is set to the
    /// number of rows so that proximity row `i` lines up with training row `i`.
    pub fn labeled<R: AsRef<[f64]>>(rows: &[R], labels: &[u8]) -> Result<Self> {
        if rows.len() != labels.len() || labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidConfig("labels must be 0/1, one per row".into()));
        }
        let (n_features, values) = flatten(rows)?;
        Ok(Self {
            n_features,
            values,
            labels: labels.to_vec(),
            n_real: rows.len(),
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_features..(row + 1) * self.n_features]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.len()).map(|r| self.value(r, feature)).collect()
    }

    /// Applies `f` to every value of one column, in both classes.
    pub fn map_column(&mut self, feature: usize, f: impl Fn(f64) -> f64) {
        for r in 0..self.len() {
            let v = &mut self.values[r * self.n_features + feature];
            *v = f(*v);
        }
    }
}

fn flatten<R: AsRef<[f64]>>(rows: &[R]) -> Result<(usize, Vec<f64>)> {
    let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    let mut values = Vec::with_capacity(rows.len() * p);
    for r in rows {
        let r = r.as_ref();
        if r.len() != p {
            return Err(Error::ColumnMismatch {
                expected: p,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite value in forest input".into()));
        }
        values.extend_from_slice(r);
    }
    Ok((p, values))
}

/// Real rows (class 1) followed by as many synthetic rows (class 0) whose
/// columns are independent with-replacement draws from the real columns.
pub fn make_contrast<R: AsRef<[f64]>>(real: &[R], seed: u64) -> Result<ContrastDataset> {
    if real.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: real.len(),
        });
    }
    let (p, mut values) = flatten(real)?;
    let n = real.len();
    let mut synthetic = vec![0.0; n * p];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in 0..p {
        for r in 0..n {
            let src = rng.gen_range(0..n);
            synthetic[r * p + f] = values[src * p + f];
        }
    }
    values.extend(synthetic);
    let mut labels = vec![REAL; n];
    labels.extend(std::iter::repeat_n(SYNTHETIC, n));
    Ok(ContrastDataset {
        n_features: p,
        values,
        labels,
        n_real: n,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Gini decrease weighted by the node's share of the bootstrap sample.
        decrease: f64,
    },
    Leaf {
        /// Bootstrap sample counts per class.
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Times each training row was drawn into the bootstrap sample.
    in_bag: Vec<u32>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn in_bag(&self) -> &[u32] {
        &self.in_bag
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        match &self.nodes[self.leaf_of(row)] {
            Node::Leaf { counts } => u8::from(counts[1] > counts[0]),
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Weighted Gini impurity of the root minus that of all leaves.
    pub fn impurity_drop(&self) -> f64 {
        let total = self.in_bag.iter().sum::<u32>() as f64;
        let leaves: f64 = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts } => {
                    let m = (counts[0] + counts[1]) as f64;
                    Some(m / total * gini(counts[0] as f64, counts[1] as f64))
                }
                _ => None,
            })
            .sum();
        let mut root = [0.0f64; 2];
        for n in &self.nodes {
            if let Node::Leaf { counts } = n {
                root[0] += counts[0] as f64;
                root[1] += counts[1] as f64;
            }
        }
        gini(root[0], root[1]) - leaves
    }
}

fn gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 / n, c1 / n);
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features sampled as split candidates at each node.
    pub mtry: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 5000,
            mtry: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    config: ForestConfig,
    n_features: usize,
    n_real: usize,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn config(&self) -> ForestConfig {
        self.config
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote over trees; ties go to class 1.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let votes: usize = self.trees.iter().map(|t| t.predict(row) as usize).sum();
        u8::from(2 * votes >= self.trees.len())
    }
}

/// Random number stream for one tree: the master seed with the tree index
/// as the ChaCha stream id, so results do not depend on scheduling.
fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

pub fn train_forest(data: &ContrastDataset, n_trees: usize, mtry: usize, seed: u64) -> Result<Forest> {
    train_forest_with(data, ForestConfig { n_trees, mtry, seed })
}

pub fn train_forest_with(data: &ContrastDataset, config: ForestConfig) -> Result<Forest> {
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
    }
    if config.mtry == 0 || config.mtry > data.n_features() {
        return Err(Error::InvalidConfig(format!(
            "mtry {} outside 1..={}",
            config.mtry,
            data.n_features()
        )));
    }
    if data.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(data, config.mtry, &mut tree_rng(config.seed, t)))
        .collect();
    Ok(Forest {
        trees,
        config,
        n_features: data.n_features(),
        n_real: data.n_real(),
    })
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    n_left: usize,
    decrease: f64,
}

fn grow_tree(data: &ContrastDataset, mtry: usize, rng: &mut ChaCha8Rng) -> Tree {
    let n = data.len();
    let mut in_bag = vec![0u32; n];
    let sample_rows: Vec<usize> = (0..n)
        .map(|_| {
            let r = rng.gen_range(0..n);
            in_bag[r] += 1;
            r
        })
        .collect();
    let total = n as f64;
    let mut nodes: Vec<Node> = vec![Node::Leaf { counts: [0, 0] }];
    // (node index, sample rows reaching it)
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, sample_rows)];
    let mut order: Vec<usize> = Vec::new();
    while let Some((id, rows)) = stack.pop() {
        let mut counts = [0u32; 2];
        for &r in &rows {
            counts[data.labels[r] as usize] += 1;
        }
        if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 {
            nodes[id] = Node::Leaf { counts };
            continue;
        }
        let m = rows.len() as f64;
        let parent_gini = gini(counts[0] as f64, counts[1] as f64);
        let mut best: Option<BestSplit> = None;
        for feature in sample(rng, data.n_features(), mtry).into_iter() {
            order.clear();
            order.extend_from_slice(&rows);
            order.sort_by(|&a, &b| data.value(a, feature).total_cmp(&data.value(b, feature)));
            let mut left = [0u32; 2];
            for pos in 0..order.len() - 1 {
                left[data.labels[order[pos]] as usize] += 1;
                let a = data.value(order[pos], feature);
                let b = data.value(order[pos + 1], feature);
                if a == b {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = m - nl;
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let child = nl / m * gini(left[0] as f64, left[1] as f64)
                    + nr / m * gini(right[0] as f64, right[1] as f64);
                let decrease = m / total * (parent_gini - child);
                if decrease > 0.0 && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        n_left: pos + 1,
                        decrease,
                    });
                }
            }
        }
        let Some(split) = best else {
            nodes[id] = Node::Leaf { counts };
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| data.value(r, split.feature) <= split.threshold);
        debug_assert_eq!(left_rows.len(), split.n_left);
        let left = nodes.len();
        nodes.push(Node::Leaf { counts: [0, 0] });
        let right = nodes.len();
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            decrease: split.decrease,
        };
        stack.push((right, right_rows));
        stack.push((left, left_rows));
    }
    Tree { nodes, in_bag }
}

/// Fraction of trees in which each pair of `rows` shares a leaf.
pub fn proximity<R: AsRef<[f64]> + Sync>(forest: &Forest, rows: &[R]) -> Result<SquareMatrix> {
    proximity_with(forest, rows, false)
}

/// With `out_of_bag`, a pair only counts in trees where neither row was in
/// the bootstrap sample, and the denominator is the number of such trees.
/// Out-of-bag mode assumes `rows[i]` is training row `i`.
pub fn proximity_with<R: AsRef<[f64]> + Sync>(
    forest: &Forest,
    rows: &[R],
    out_of_bag: bool,
) -> Result<SquareMatrix> {
    for r in rows {
        if r.as_ref().len() != forest.n_features {
            return Err(Error::ColumnMismatch {
                expected: forest.n_features,
                got: r.as_ref().len(),
            });
        }
    }
    let n = rows.len();
    if out_of_bag && n > forest.n_real {
        return Err(Error::InvalidConfig(
            "out-of-bag proximity needs rows that are training rows".into(),
        ));
    }
    let chunk = forest.trees.len().div_ceil(rayon::current_num_threads().max(1) * 4).max(1);
    let zero = || (vec![0u32; n * n], vec![0u32; n * n]);
    let (same, seen) = forest
        .trees
        .par_chunks(chunk)
        .map(|trees| {
            let (mut same, mut seen) = zero();
            let mut leaves = vec![0usize; n];
            for tree in trees {
                for (i, r) in rows.iter().enumerate() {
                    leaves[i] = tree.leaf_of(r.as_ref());
                }
                let usable: Vec<usize> = if out_of_bag {
                    (0..n).filter(|&i| tree.in_bag[i] == 0).collect()
                } else {
                    (0..n).collect()
                };
                for (a, &i) in usable.iter().enumerate() {
                    for &j in &usable[a + 1..] {
                        seen[i * n + j] += 1;
                        if leaves[i] == leaves[j] {
                            same[i * n + j] += 1;
                        }
                    }
                }
            }
            (same, seen)
        })
        .reduce(zero, |(mut s1, mut c1), (s2, c2)| {
            s1.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
            c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
            (s1, c1)
        });
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        out.set(i, i, 1.0);
        for j in i + 1..n {
            let den = seen[i * n + j];
            let v = if den == 0 {
                0.0
            } else {
                same[i * n + j] as f64 / den as f64
            };
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    /// Mean over trees of the summed weighted Gini decreases per feature.
    pub values: Vec<f64>,
    /// 1 = most important; ties keep column order.
    pub ranks: Vec<usize>,
}

pub fn gini_importance(forest: &Forest) -> Importance {
    let p = forest.n_features;
    let mut values = vec![0.0; p];
    for tree in &forest.trees {
        for node in &tree.nodes {
            if let Node::Split { feature, decrease, .. } = node {
                values[*feature] += decrease;
            }
        }
    }
    let n = forest.trees.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; p];
    for (pos, &f) in order.iter().enumerate() {
        ranks[f] = pos + 1;
    }
    Importance { values, ranks }
}
