//! Piecewise-constant conditional-mean estimation on data-dependent cells of
//! (nearly) equal sample count.
//!
//! The partition is a binary tree: each split takes the coordinate with the
//! largest sample range and cuts at its lower median, points `≤` the
//! threshold going left. Splitting proceeds level by level, left to right,
//! until the requested number of leaves exists.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Paired regressors and scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl SampleSet {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        let d = xs[0].len();
        if let Some(bad) = xs.iter().find(|x| x.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        if xs.iter().flatten().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        coord: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A binary split tree whose leaves tile `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<Node>,
    n_cells: usize,
}

impl Partition {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Index of the leaf containing `x`, numbered left to right.
    pub fn locate(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(id) => return id,
                Node::Split {
                    coord,
                    threshold,
                    left,
                    right,
                } => at = if x[coord] <= threshold { left } else { right },
            }
        }
    }

    /// Number of leaves claiming `x` by an exhaustive walk (always 1).
    pub fn claim_count(&self, x: &[f64]) -> usize {
        fn walk(nodes: &[Node], at: usize, x: &[f64]) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 1,
                Node::Split {
                    coord,
                    threshold,
                    left,
                    right,
                } => {
                    let l = if x[coord] <= threshold { walk(nodes, left, x) } else { 0 };
                    let r = if x[coord] > threshold { walk(nodes, right, x) } else { 0 };
                    l + r
                }
            }
        }
        walk(&self.nodes, 0, x)
    }
}

fn split_rule(xs: &[Vec<f64>], members: &[usize]) -> Option<(usize, f64)> {
    if members.is_empty() {
        return None;
    }
    let d = xs[members[0]].len();
    if d == 0 {
        return None;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..d {
        let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(xs[i][c]), hi.max(xs[i][c]))
        });
        if hi - lo > best.1 {
            best = (c, hi - lo);
        }
    }
    let coord = best.0;
    let mut values: Vec<f64> = members.iter().map(|&i| xs[i][coord]).collect();
    values.sort_by(f64::total_cmp);
    Some((coord, values[(values.len() - 1) / 2]))
}

/// Split the regressors into `cells` leaves.
pub fn build_partition(xs: &[Vec<f64>], cells: usize) -> Result<Partition> {
    if cells == 0 {
        return Err(Error::InvalidArgument("need at least one cell".into()));
    }
    if cells > xs.len() {
        return Err(Error::TooManyCells {
            cells,
            samples: xs.len(),
        });
    }

    let mut nodes = vec![Node::Leaf(0)];
    let mut members: Vec<Vec<usize>> = vec![(0..xs.len()).collect()];
    // leaves of the current level, left to right, as (node index, member slot)
    let mut level: VecDeque<(usize, usize)> = VecDeque::from([(0, 0)]);
    let mut n_leaves = 1;

    while n_leaves < cells {
        let mut next = VecDeque::new();
        while let Some((node, slot)) = level.pop_front() {
            if n_leaves == cells {
                next.push_back((node, slot));
                continue;
            }
            let mine = std::mem::take(&mut members[slot]);
            let (coord, threshold) = split_rule(xs, &mine).unwrap_or((0, 0.0));
            let (l, r): (Vec<usize>, Vec<usize>) =
                mine.into_iter().partition(|&i| xs[i][coord] <= threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf(0));
            nodes.push(Node::Leaf(0));
            nodes[node] = Node::Split {
                coord,
                threshold,
                left,
                right: left + 1,
            };
            members.push(l);
            members.push(r);
            next.push_back((left, members.len() - 2));
            next.push_back((left + 1, members.len() - 1));
            n_leaves += 1;
        }
        level = next;
    }

    // number leaves by an in-order walk
    let mut id = 0;
    let mut stack = vec![0];
    while let Some(at) = stack.pop() {
        match nodes[at] {
            Node::Leaf(_) => {
                nodes[at] = Node::Leaf(id);
                id += 1;
            }
            Node::Split { left, right, .. } => {
                stack.push(right);
                stack.push(left);
            }
        }
    }
    Ok(Partition {
        nodes,
        n_cells: cells,
    })
}

/// Cell means of a vector-valued response over one shared partition.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEstimator {
    pub partition: Partition,
    /// `None` for cells no sample landed in.
    pub cell_means: Vec<Option<Vec<f64>>>,
    pub global_mean: Vec<f64>,
}

impl VectorEstimator {
    pub fn predict(&self, x: &[f64]) -> &[f64] {
        match &self.cell_means[self.partition.locate(x)] {
            Some(mean) => mean,
            None => &self.global_mean,
        }
    }
}

/// Fit every component of `ys` on the same partition.
pub fn fit_vector(partition: &Partition, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<VectorEstimator> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if ys.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    // means are accumulated as deviations from the first sample seen, so a
    // constant response is reproduced exactly
    let width = ys[0].len();
    let cells = partition.n_cells();
    let mut shifts: Vec<Option<&[f64]>> = vec![None; cells];
    let mut sums = vec![vec![0.0; width]; cells];
    let mut counts = vec![0usize; cells];
    let global_shift = &ys[0];
    let mut total = vec![0.0; width];
    for (x, y) in xs.iter().zip(ys) {
        let c = partition.locate(x);
        counts[c] += 1;
        let shift = *shifts[c].get_or_insert(y);
        for k in 0..width {
            sums[c][k] += y[k] - shift[k];
            total[k] += y[k] - global_shift[k];
        }
    }
    let m = ys.len() as f64;
    let cell_means = sums
        .into_iter()
        .zip(counts)
        .zip(shifts)
        .map(|((s, n), shift)| {
            shift.map(|sh| s.into_iter().zip(sh).map(|(v, o)| o + v / n as f64).collect())
        })
        .collect();
    Ok(VectorEstimator {
        partition: partition.clone(),
        cell_means,
        global_mean: total.into_iter().zip(global_shift).map(|(v, o)| o + v / m).collect(),
    })
}

/// Scalar-response estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEstimator {
    inner: VectorEstimator,
}

impl PartitionEstimator {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.inner.predict(x)[0]
    }

    pub fn partition(&self) -> &Partition {
        &self.inner.partition
    }

    pub fn global_mean(&self) -> f64 {
        self.inner.global_mean[0]
    }

    pub fn cell_mean(&self, cell: usize) -> Option<f64> {
        self.inner.cell_means[cell].as_ref().map(|m| m[0])
    }
}

pub fn fit(partition: &Partition, samples: &SampleSet) -> Result<PartitionEstimator> {
    let ys: Vec<Vec<f64>> = samples.ys.iter().map(|y| vec![*y]).collect();
    Ok(PartitionEstimator {
        inner: fit_vector(partition, &samples.xs, &ys)?,
    })
}

/// `max(8, largest power of two ≤ ⌊√M⌋)`, capped at `M`.
pub fn default_cells(samples: usize) -> usize {
    let root = (samples as f64).sqrt().floor() as usize;
    let pow = if root == 0 { 1 } else { 1usize << root.ilog2() };
    pow.max(8).min(samples.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn cloud(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| (0..d).map(|_| uniform(&mut rng)).collect()).collect()
    }

    fn counts(p: &Partition, xs: &[Vec<f64>]) -> Vec<usize> {
        let mut c = vec![0; p.n_cells()];
        for x in xs {
            c[p.locate(x)] += 1;
        }
        c
    }

    #[test]
    fn single_cell_and_line_split() {
        let xs = cloud(10, 3, 1);
        let p = build_partition(&xs, 1).unwrap();
        assert_eq!(counts(&p, &xs), vec![10]);
        let line: Vec<Vec<f64>> = [3.0, 1.0, 4.0, 2.0].iter().map(|v| vec![*v]).collect();
        let p = build_partition(&line, 2).unwrap();
        assert_eq!(counts(&p, &line), vec![2, 2]);
        assert_eq!(p.locate(&[2.0]), 0);
        assert_eq!(p.locate(&[2.5]), 1);
        assert!(matches!(build_partition(&line, 5), Err(Error::TooManyCells { .. })));
    }

    #[test]
    fn balanced_leaves_for_powers_of_two() {
        let xs = cloud(1024, 3, 7);
        for k in 0..=6 {
            let r = 1 << k;
            let p = build_partition(&xs, r).unwrap();
            assert!(counts(&p, &xs).iter().all(|&c| c == 1024 / r), "R = {r}");
        }
    }

    #[test]
    fn non_power_of_two_deepens_left_first() {
        let line: Vec<Vec<f64>> = (0..12).map(|v| vec![v as f64]).collect();
        let p = build_partition(&line, 3).unwrap();
        assert_eq!(counts(&p, &line), vec![3, 3, 6]);
    }

    #[test]
    fn range_ties_pick_the_lowest_coordinate() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.2, 0.9], vec![0.8, 0.1]];
        let p = build_partition(&xs, 2).unwrap();
        // split on coordinate 0 at 0.2
        assert_eq!(p.locate(&[0.2, 5.0]), 0);
        assert_eq!(p.locate(&[0.3, -5.0]), 1);
    }

    #[test]
    fn tiling_on_random_queries() {
        let xs = cloud(500, 2, 3);
        let p = build_partition(&xs, 20).unwrap();
        for q in cloud(10_000, 2, 4) {
            let q: Vec<f64> = q.iter().map(|v| 4.0 * v - 2.0).collect();
            assert_eq!(p.claim_count(&q), 1);
        }
    }

    #[test]
    fn constant_response_is_reproduced() {
        let xs = cloud(64, 2, 9);
        let s = SampleSet::new(xs.clone(), vec![2.5; 64]).unwrap();
        let p = build_partition(&xs, 8).unwrap();
        let est = fit(&p, &s).unwrap();
        for q in cloud(100, 2, 10) {
            assert_eq!(est.predict(&q), 2.5);
        }
    }

    #[test]
    fn singleton_cells_reproduce_samples_and_empty_cells_fall_back() {
        let xs = vec![vec![0.0], vec![1.0]];
        let s = SampleSet::new(xs.clone(), vec![-1.0, 3.0]).unwrap();
        let p = build_partition(&xs, 2).unwrap();
        let est = fit(&p, &s).unwrap();
        assert_eq!(est.predict(&[0.0]), -1.0);
        assert_eq!(est.predict(&[1.0]), 3.0);
        // fit on data that misses the right cell entirely
        let only_left = SampleSet::new(vec![vec![-3.0], vec![-2.0]], vec![4.0, 6.0]).unwrap();
        let est = fit(&p, &only_left).unwrap();
        assert_eq!(est.cell_mean(1), None);
        assert_eq!(est.predict(&[0.7]), 5.0);
        assert_eq!(est.predict(&[-0.5]), est.predict(&[-10.0]));
    }

    #[test]
    fn in_sample_error_shrinks_with_more_data() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() + x[1] * x[1];
        let mut last = f64::INFINITY;
        for m in [256, 1024, 4096, 16384] {
            let xs = cloud(m, 2, 21);
            let mut rng = ChaCha8Rng::seed_from_u64(22);
            let noise: Vec<f64> = (0..m).map(|_| 0.1 * (uniform(&mut rng) - 0.5)).collect();
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| f(x) + e).collect();
            let s = SampleSet::new(xs.clone(), ys).unwrap();
            let p = build_partition(&xs, default_cells(m)).unwrap();
            let est = fit(&p, &s).unwrap();
            let mse = xs.iter().map(|x| (est.predict(x) - f(x)).powi(2)).sum::<f64>() / m as f64;
            assert!(mse <= last, "m = {m}: {mse} > {last}");
            last = mse;
        }
    }

    #[test]
    fn default_cell_rule() {
        assert_eq!(default_cells(4), 4);
        assert_eq!(default_cells(100), 8);
        assert_eq!(default_cells(1000), 16);
        assert_eq!(default_cells(20_000), 128);
    }
}
