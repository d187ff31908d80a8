//! One-pass mean / co-moment accumulator with an associative merge.

/// Running mean and co-moment matrix of a fixed-width vector.
///
/// Updates use Welford's recurrence; [`MomentAccumulator::merge`] is the
/// pairwise combination of Chan, Golub and LeVeque, so partial results from
/// independent blocks can be folded together.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    mean: Vec<f64>,
    /// Row-major `dim x dim`; only `i <= j` is maintained, the rest mirrored
    /// on read.
    comoment: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    #[allow(clippy::needless_range_loop)]
    pub fn push(&mut self, x: &[f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        // (x_i - old mean_i)(x_j - new mean_j) = d_i d_j (n - 1) / n
        let shrink = 1.0 - inv;
        for i in 0..n {
            let di = x[i] - self.mean[i];
            for j in i..n {
                self.comoment[i * n + j] += di * (x[j] - self.mean[j]) * shrink;
            }
        }
        for (m, xi) in self.mean.iter_mut().zip(x) {
            *m += (xi - *m) * inv;
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        let n = self.dim();
        assert_eq!(n, other.dim());
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            self.clone_from(other);
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        let delta: Vec<f64> = (0..n).map(|i| other.mean[i] - self.mean[i]).collect();
        let w = na * nb / total;
        for i in 0..n {
            for j in i..n {
                self.comoment[i * n + j] += other.comoment[i * n + j] + delta[i] * delta[j] * w;
            }
        }
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d * (nb / total);
        }
        self.count += other.count;
    }

    /// Unbiased sample covariance of coordinates `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if self.count < 2 {
            return f64::NAN;
        }
        self.comoment[i * self.dim() + j] / (self.count - 1) as f64
    }

    /// Standard error of the sample mean of coordinate `i`.
    pub fn standard_error(&self, i: usize) -> f64 {
        (self.covariance(i, i) / self.count as f64).sqrt()
    }
}
