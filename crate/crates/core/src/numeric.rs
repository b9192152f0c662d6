//! Small numeric kernels shared across the crate: a mergeable log-sum-exp
//! accumulator, a dense linear solve for stationary vectors, and a
//! least-squares slope fit.

/// Streaming accumulator for `log(sum_i exp(x_i))`.
///
/// Internally keeps the running maximum and the sum rescaled by it, so terms
/// spanning hundreds of orders of magnitude combine without overflow. Partial
/// accumulators merge associatively: splitting a term list into blocks,
/// folding each block, and merging the results agrees with a single
/// sequential fold to well below 1e-10, which is what makes the parallel
/// reductions deterministic enough to ship.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    max: f64,
    scaled: f64,
    count: usize,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum { max: f64::NEG_INFINITY, scaled: 0.0, count: 0 }
    }

    /// Add one term `exp(x)` to the sum.
    pub fn push(&mut self, x: f64) {
        debug_assert!(!x.is_nan(), "log-sum-exp term is NaN");
        self.count += 1;
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Combine two partial sums; the result represents the union of terms.
    pub fn merge(mut self, other: LogSum) -> LogSum {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
        self.count += other.count;
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `log(sum exp(x_i))`, or `None` when no term has been pushed.
    /// An empty sum is reported as absent rather than as negative infinity so
    /// callers must decide what an empty selection means.
    pub fn value(&self) -> Option<f64> {
        if self.count == 0 {
            None
        } else {
            Some(self.max + self.scaled.ln())
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// Two-term log-sum-exp, `log(exp(a) + exp(b))`, stable in either order.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Solve the square system `A x = b` by Gaussian elimination with partial
/// pivoting. Matrices here are tiny (alphabet-sized), so no factorization
/// reuse is attempted.
// Index form throughout: rows `row` and `col` are borrowed from `m` at once.
#[allow(clippy::needless_range_loop)]
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Least-squares slope of `y` against `x`. Returns `None` with fewer than two
/// points or a degenerate abscissa.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsum_matches_direct_evaluation() {
        let terms = [0.3, -1.2, 4.0, 2.5, -0.7];
        let mut acc = LogSum::new();
        for &t in &terms {
            acc.push(t);
        }
        let direct = terms.iter().map(|t| t.exp()).sum::<f64>().ln();
        assert!((acc.value().unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn logsum_survives_huge_spread() {
        let mut acc = LogSum::new();
        acc.push(-900.0);
        acc.push(900.0);
        assert!((acc.value().unwrap() - 900.0).abs() < 1e-12);
    }

    #[test]
    fn empty_logsum_has_no_value() {
        assert!(LogSum::new().value().is_none());
    }

    #[test]
    fn merge_agrees_with_sequential_fold() {
        let terms: Vec<f64> = (0..100).map(|i| (i as f64) * 0.37 - 20.0).collect();
        let mut whole = LogSum::new();
        for &t in &terms {
            whole.push(t);
        }
        let (left, right) = terms.split_at(33);
        let mut a = LogSum::new();
        let mut b = LogSum::new();
        for &t in left {
            a.push(t);
        }
        for &t in right {
            b.push(t);
        }
        let merged = a.merge(b).value().unwrap();
        assert!((merged - whole.value().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dense_solve_recovers_known_solution() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * x_true[j]).sum())
            .collect();
        let x = solve_dense(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|t| -0.7 * t + 3.0).collect();
        let s = least_squares_slope(&x, &y).unwrap();
        assert!((s + 0.7).abs() < 1e-12);
    }
}
