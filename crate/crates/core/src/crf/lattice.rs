//! Exact inference on a linear-chain lattice, entirely in log space.
//!
//! A lattice of `n` positions and `m` labels is described by row-major
//! `n x m` unary scores, an `m x m` transition matrix (`from * m + to`) and
//! per-label start and end scores. Scores may be `-inf` to forbid a label
//! or transition; at least one path must stay finite.

/// Numerically stable `log(sum(exp(x)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

#[derive(Clone, Copy, Debug)]
pub struct Potentials<'a> {
    pub labels: usize,
    pub unary: &'a [f64],
    pub transition: &'a [f64],
    pub start: &'a [f64],
    pub end: &'a [f64],
}

/// Posterior marginals of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub labels: usize,
    /// `n x m`, row `i` is the label distribution at position `i`.
    pub node: Vec<f64>,
    /// `(n - 1) x m x m`, block `i` is the joint distribution of positions `i`, `i + 1`.
    pub edge: Vec<f64>,
}

impl Marginals {
    pub fn node_row(&self, i: usize) -> &[f64] {
        &self.node[i * self.labels..(i + 1) * self.labels]
    }

    pub fn edge_block(&self, i: usize) -> &[f64] {
        let mm = self.labels * self.labels;
        &self.edge[i * mm..(i + 1) * mm]
    }
}

impl Potentials<'_> {
    pub fn len(&self) -> usize {
        self.unary.len() / self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    #[inline]
    fn u(&self, i: usize, y: usize) -> f64 {
        self.unary[i * self.labels + y]
    }

    #[inline]
    fn t(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.labels + to]
    }

    /// Unnormalized log-score of a label path.
    pub fn score(&self, path: &[usize]) -> f64 {
        debug_assert_eq!(path.len(), self.len());
        let Some((&first, _)) = path.split_first() else {
            return 0.0;
        };
        let mut s = self.start[first] + self.end[*path.last().unwrap()];
        for (i, &y) in path.iter().enumerate() {
            s += self.u(i, y);
            if i > 0 {
                s += self.t(path[i - 1], y);
            }
        }
        s
    }

    /// Forward log-scores `alpha[i * m + y]`: all prefixes ending in `y` at `i`.
    pub fn forward(&self) -> Vec<f64> {
        let (n, m) = (self.len(), self.labels);
        let mut alpha = vec![0.0; n * m];
        for (y, a) in alpha[..m].iter_mut().enumerate() {
            *a = self.start[y] + self.u(0, y);
        }
        let mut scratch = vec![0.0; m];
        for i in 1..n {
            for y in 0..m {
                for (x, s) in scratch.iter_mut().enumerate() {
                    *s = alpha[(i - 1) * m + x] + self.t(x, y);
                }
                alpha[i * m + y] = log_sum_exp(scratch.iter().copied()) + self.u(i, y);
            }
        }
        alpha
    }

    /// Backward log-scores `beta[i * m + y]`: all suffixes after `y` at `i`, end score included.
    pub fn backward(&self) -> Vec<f64> {
        let (n, m) = (self.len(), self.labels);
        let mut beta = vec![0.0; n * m];
        beta[(n - 1) * m..].copy_from_slice(self.end);
        let mut scratch = vec![0.0; m];
        for i in (0..n - 1).rev() {
            for y in 0..m {
                for (z, s) in scratch.iter_mut().enumerate() {
                    *s = self.t(y, z) + self.u(i + 1, z) + beta[(i + 1) * m + z];
                }
                beta[i * m + y] = log_sum_exp(scratch.iter().copied());
            }
        }
        beta
    }

    pub fn log_partition(&self) -> f64 {
        let alpha = self.forward();
        self.log_partition_from(&alpha)
    }

    fn log_partition_from(&self, alpha: &[f64]) -> f64 {
        let (n, m) = (self.len(), self.labels);
        log_sum_exp((0..m).map(|y| alpha[(n - 1) * m + y] + self.end[y]))
    }

    /// Node and edge marginals plus the log-partition.
    pub fn marginals(&self) -> (Marginals, f64) {
        let (n, m) = (self.len(), self.labels);
        let alpha = self.forward();
        let beta = self.backward();
        let log_z = self.log_partition_from(&alpha);
        let node = alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a + b - log_z).exp())
            .collect();
        let mut edge = vec![0.0; n.saturating_sub(1) * m * m];
        for i in 0..n.saturating_sub(1) {
            for x in 0..m {
                let a = alpha[i * m + x];
                for z in 0..m {
                    let v = a + self.t(x, z) + self.u(i + 1, z) + beta[(i + 1) * m + z] - log_z;
                    edge[(i * m + x) * m + z] = v.exp();
                }
            }
        }
        (
            Marginals {
                labels: m,
                node,
                edge,
            },
            log_z,
        )
    }

    /// Highest-scoring path and its score. Ties go to the lower label index,
    /// both for the final label and for every back-pointer.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let (n, m) = (self.len(), self.labels);
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta = vec![0.0; n * m];
        let mut back = vec![0usize; n * m];
        for (y, d) in delta[..m].iter_mut().enumerate() {
            *d = self.start[y] + self.u(0, y);
        }
        for i in 1..n {
            for y in 0..m {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for x in 0..m {
                    let s = delta[(i - 1) * m + x] + self.t(x, y);
                    if s > best {
                        best = s;
                        arg = x;
                    }
                }
                delta[i * m + y] = best + self.u(i, y);
                back[i * m + y] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for y in 0..m {
            let s = delta[(n - 1) * m + y] + self.end[y];
            if s > best {
                best = s;
                last = y;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = last;
        for i in (1..n).rev() {
            path[i - 1] = back[i * m + path[i]];
        }
        (path, best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_handles_infinities() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, 3.0]), 3.0);
    }

    #[test]
    fn forbidden_transitions_are_respected() {
        // Label 1 may not follow label 0 and may not start.
        let ninf = f64::NEG_INFINITY;
        let unary = [0.0, 5.0, 0.0, 5.0];
        let transition = [0.0, ninf, 0.0, 0.0];
        let p = Potentials {
            labels: 2,
            unary: &unary,
            transition: &transition,
            start: &[0.0, ninf],
            end: &[0.0, 0.0],
        };
        let (path, score) = p.viterbi();
        assert_eq!((path, score), (vec![0, 0], 0.0));
        assert!((p.log_partition() - 0.0).abs() < 1e-12);
        let (marg, _) = p.marginals();
        assert!((marg.node_row(1)[1]).abs() < 1e-15);
    }
}
