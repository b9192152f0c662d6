//! Transfer-operator oracle for suspension flows over subshifts of finite
//! type with depth-1 roof and potential.
//!
//! The pressure of the flow is the unique `s` where the weighted adjacency
//! matrix `M(s)_ij = A_ij exp(f_i r_i - s r_i)` has spectral radius one;
//! everything else (equilibrium measure, entropies, averages) falls out of
//! the Perron eigendata at that parameter.

use super::ShiftSystem;
use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::orbits::Potential;
use rand::Rng;

/// Relative gap at which the Collatz-Wielandt bracket is considered closed.
const POWER_TOL: f64 = 1e-14;
/// Residual |spectral radius - 1| accepted by the pressure solve.
const ROOT_TOL: f64 = 1e-12;

pub(crate) struct Perron {
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
        .collect()
}

/// Perron root and positive eigenvector of an irreducible nonnegative matrix
/// by power iteration on the diagonally shifted matrix (the shift makes the
/// dominant eigenvalue strict even for periodic adjacency structures).
/// Collatz-Wielandt ratios give a rigorous bracket; iteration stops when the
/// bracket closes to `POWER_TOL` relative width.
fn perron_root(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = m.len();
    let shift = 1.0 + m
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..2_000_000 {
        let mut w = mat_vec(m, &v);
        for i in 0..n {
            w[i] += shift * v[i];
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let ratio = w[i] / v[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let norm: f64 = w.iter().sum();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if hi - lo <= POWER_TOL * hi {
            return Ok((0.5 * (lo + hi) - shift, v));
        }
    }
    Err(Error::InvalidSystem(
        "power iteration failed to converge on the transfer matrix".into(),
    ))
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j]).collect()).collect()
}

fn perron(m: &[Vec<f64>]) -> Result<Perron> {
    let (lambda, right) = perron_root(m)?;
    let (_, left) = perron_root(&transpose(m))?;
    Ok(Perron { lambda, right, left })
}

impl ShiftSystem {
    /// The weighted adjacency matrix `M(s)` of the suspension at parameter `s`.
    fn transfer_matrix(&self, f_vals: &[f64], s: f64) -> Vec<Vec<f64>> {
        let m = self.alphabet_size();
        (0..m)
            .map(|i| {
                let w = ((f_vals[i] - s) * self.roof(i)).exp();
                (0..m)
                    .map(|j| if self.edge(i, j) { w } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    fn log_spectral_radius(&self, f_vals: &[f64], s: f64) -> Result<f64> {
        Ok(perron_root(&self.transfer_matrix(f_vals, s))?.0.ln())
    }

    /// Pressure of the suspension flow weighted by `f`: the root of
    /// `spectral_radius(M(s)) = 1`, bracketed by doubling steps, narrowed by
    /// twenty bisections, then polished by Newton steps on the log spectral
    /// radius (whose derivative is minus the Perron-weighted mean roof).
    pub fn bowen_pressure(&self, f: &Potential) -> Result<f64> {
        self.bowen_pressure_values(&self.symbol_values(f)?)
    }

    pub(crate) fn bowen_pressure_values(&self, f_vals: &[f64]) -> Result<f64> {
        let g0 = self.log_spectral_radius(f_vals, 0.0)?;
        let (mut lo, mut hi);
        let mut step = 1.0;
        if g0 > 0.0 {
            lo = 0.0;
            hi = step;
            while self.log_spectral_radius(f_vals, hi)? > 0.0 {
                lo = hi;
                step *= 2.0;
                hi += step;
            }
        } else {
            hi = 0.0;
            lo = -step;
            while self.log_spectral_radius(f_vals, lo)? <= 0.0 {
                hi = lo;
                step *= 2.0;
                lo -= step;
            }
        }
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if self.log_spectral_radius(f_vals, mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..60 {
            let matrix = self.transfer_matrix(f_vals, s);
            let eig = perron(&matrix)?;
            if (eig.lambda - 1.0).abs() <= ROOT_TOL {
                return Ok(s);
            }
            let g = eig.lambda.ln();
            if g > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let uv: f64 = eig.left.iter().zip(&eig.right).map(|(u, v)| u * v).sum();
            let urv: f64 = (0..self.alphabet_size())
                .map(|i| eig.left[i] * self.roof(i) * eig.right[i])
                .sum();
            let derivative = -urv / uv; // d/ds log spectral radius
            let mut next = s - g / derivative;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            s = next;
        }
        Err(Error::InvalidSystem(
            "pressure solve did not reach the residual tolerance".into(),
        ))
    }

    /// Equilibrium measure of the suspension flow weighted by `f`, as the
    /// stationary Markov measure built from the Perron eigendata of `M(s*)`.
    /// Its flow lift satisfies entropy + mean potential = pressure.
    pub fn gibbs_equilibrium(&self, f: &Potential) -> Result<MarkovMeasure> {
        let f_vals = self.symbol_values(f)?;
        let s_star = self.bowen_pressure_values(&f_vals)?;
        let matrix = self.transfer_matrix(&f_vals, s_star);
        let eig = perron(&matrix)?;
        let m = self.alphabet_size();
        let mut transition = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                transition[i][j] = matrix[i][j] * eig.right[j] / (eig.lambda * eig.right[i]);
            }
            let row_sum: f64 = transition[i].iter().sum();
            for q in transition[i].iter_mut() {
                *q /= row_sum;
            }
        }
        // The left-right product is stationary analytically; re-solving the
        // balance equations scrubs the power-iteration residual.
        let stationary = stationary_distribution(&transition)?;
        MarkovMeasure::new(self, stationary, transition)
    }
}

/// Solve `p Q = p`, `sum p = 1` for an irreducible stochastic matrix by
/// replacing one balance equation with the normalization row.
pub(crate) fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = q.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        for j in 0..m {
            a[i][j] = q[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[m - 1].fill(1.0);
    b[m - 1] = 1.0;
    solve_dense(&a, &b)
        .filter(|p| p.iter().all(|&pi| pi > -1e-12))
        .map(|mut p| {
            for pi in p.iter_mut() {
                *pi = pi.max(0.0);
            }
            let z: f64 = p.iter().sum();
            for pi in p.iter_mut() {
                *pi /= z;
            }
            p
        })
        .ok_or_else(|| Error::InvalidMeasure("stationary distribution solve failed".into()))
}

/// A shift-invariant Markov measure compatible with an adjacency structure:
/// stationary row vector plus a row-stochastic transition matrix supported on
/// the allowed edges.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    stationary: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

impl MarkovMeasure {
    pub fn new(shift: &ShiftSystem, stationary: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let m = shift.alphabet_size();
        if stationary.len() != m || transition.len() != m {
            return Err(Error::InvalidMeasure("dimension mismatch with the shift".into()));
        }
        let p_sum: f64 = stationary.iter().sum();
        if (p_sum - 1.0).abs() > 1e-12 || stationary.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidMeasure("stationary vector is not a distribution".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidMeasure("transition matrix is not square".into()));
            }
            let row_sum: f64 = row.iter().sum();
            if (row_sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMeasure(format!(
                    "transition row {i} sums to {row_sum}"
                )));
            }
            for (j, &q) in row.iter().enumerate() {
                if q < 0.0 {
                    return Err(Error::InvalidMeasure("negative transition weight".into()));
                }
                if q > 0.0 && !shift.edge(i, j) {
                    return Err(Error::InvalidMeasure(format!(
                        "transition {i}->{j} is not an allowed edge"
                    )));
                }
            }
        }
        for j in 0..m {
            let flow: f64 = (0..m).map(|i| stationary[i] * transition[i][j]).sum();
            if (flow - stationary[j]).abs() > 1e-9 {
                return Err(Error::InvalidMeasure(format!(
                    "stationarity fails at symbol {j}: {flow} vs {}",
                    stationary[j]
                )));
            }
        }
        Ok(MarkovMeasure { stationary, transition })
    }

    /// Draw a random compatible Markov measure: exponential row weights on
    /// the allowed edges, normalized, with the stationary vector solved
    /// exactly. The result is supported on every allowed edge.
    pub fn sample<R: Rng + ?Sized>(shift: &ShiftSystem, rng: &mut R) -> Result<Self> {
        let m = shift.alphabet_size();
        let mut transition = vec![vec![0.0; m]; m];
        for (i, row) in transition.iter_mut().enumerate() {
            let mut row_sum = 0.0;
            for (j, q) in row.iter_mut().enumerate() {
                if shift.edge(i, j) {
                    let u: f64 = rng.gen_range(1e-12..1.0);
                    *q = -u.ln();
                    row_sum += *q;
                }
            }
            for q in row.iter_mut() {
                *q /= row_sum;
            }
        }
        let stationary = stationary_distribution(&transition)?;
        MarkovMeasure::new(shift, stationary, transition)
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Entropy rate of the underlying Markov shift.
    pub fn shift_entropy(&self) -> f64 {
        let mut h = 0.0;
        for (pi, row) in self.stationary.iter().zip(&self.transition) {
            for &q in row {
                if q > 0.0 {
                    h -= pi * q * q.ln();
                }
            }
        }
        h
    }

    /// Mean roof, i.e. expected return time to the base of the suspension.
    pub fn mean_roof(&self, shift: &ShiftSystem) -> f64 {
        self.stationary
            .iter()
            .enumerate()
            .map(|(i, &p)| p * shift.roof(i))
            .sum()
    }

    /// Entropy of the suspension flow carrying this base measure: shift
    /// entropy divided by the mean roof.
    pub fn flow_entropy(&self, shift: &ShiftSystem) -> f64 {
        self.shift_entropy() / self.mean_roof(shift)
    }

    /// Probability of the depth-`d` cylinder word under the Markov measure.
    pub fn cylinder_probability(&self, word: &[u8]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let mut p = self.stationary[word[0] as usize];
        for pair in word.windows(2) {
            p *= self.transition[pair[0] as usize][pair[1] as usize];
        }
        p
    }

    /// Expectation of a fiber-constant depth-1 observable under the lift of
    /// this measure to the suspension flow (time-weighted by the roof).
    pub fn flow_average(&self, shift: &ShiftSystem, observable: &Potential) -> Result<f64> {
        match observable {
            Potential::Constant(_) => {}
            Potential::CylinderWeights { depth: 1, .. } => {}
            Potential::CylinderWeights { depth, .. } => {
                return Err(Error::InvalidPotential(format!(
                    "flow averages take depth-1 observables, got depth {depth}"
                )))
            }
            Potential::Sampled { .. } => {
                return Err(Error::InvalidPotential(
                    "sampled potentials are not defined on shift systems".into(),
                ))
            }
        }
        self.flow_expectation(shift, observable)
    }

    /// Expectation under the flow lift for constants and cylinder weights of
    /// any depth; depth-d cylinders weight the visit probability of the word
    /// by the roof over its first symbol.
    pub(crate) fn flow_expectation(&self, shift: &ShiftSystem, obs: &Potential) -> Result<f64> {
        match obs {
            Potential::Constant(c) => Ok(*c),
            Potential::CylinderWeights { depth, weights } => {
                let mut acc = 0.0;
                for word in shift.admissible_words(*depth) {
                    if let Some(&w) = weights.get(&word) {
                        if w != 0.0 {
                            acc += self.cylinder_probability(&word)
                                * w
                                * shift.roof(word[0] as usize);
                        }
                    }
                }
                Ok(acc / self.mean_roof(shift))
            }
            Potential::Sampled { .. } => Err(Error::InvalidPotential(
                "sampled potentials are not defined on shift systems".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_two(roof: Vec<f64>) -> ShiftSystem {
        ShiftSystem::full_shift(2, roof).unwrap()
    }

    fn golden_mean(roof: Vec<f64>) -> ShiftSystem {
        ShiftSystem::new(vec![vec![1, 1], vec![1, 0]], roof).unwrap()
    }

    const LOG_PHI: f64 = 0.48121182505960347;

    #[test]
    fn pressure_closed_forms() {
        let p = full_two(vec![1.0, 1.0])
            .bowen_pressure(&Potential::constant(0.0))
            .unwrap();
        assert!((p - std::f64::consts::LN_2).abs() < 1e-11);

        let p = golden_mean(vec![1.0, 1.0])
            .bowen_pressure(&Potential::constant(0.0))
            .unwrap();
        assert!((p - LOG_PHI).abs() < 1e-11);

        // weights (1, 0) on the full shift: exp(1 - s) + exp(-s) = 1
        let p = full_two(vec![1.0, 1.0])
            .bowen_pressure(&Potential::per_symbol(&[1.0, 0.0]))
            .unwrap();
        assert!((p - 1.3132616875182228).abs() < 1e-11); // log(1 + e)

        // roof (1, 2), zero weight: exp(-s) + exp(-2s) = 1
        let p = full_two(vec![1.0, 2.0])
            .bowen_pressure(&Potential::constant(0.0))
            .unwrap();
        assert!((p - LOG_PHI).abs() < 1e-11);
    }

    #[test]
    fn pressure_shifts_with_constants() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let f = Potential::per_symbol(&[0.3, -0.2]);
        let base = shift.bowen_pressure(&f).unwrap();
        for c in [-1.0, 0.5, 2.0] {
            let shifted = shift
                .bowen_pressure(&f.add(&Potential::constant(c)).unwrap())
                .unwrap();
            assert!((shifted - (base + c)).abs() < 1e-10, "c = {c}");
        }
    }

    #[test]
    fn full_shift_equilibrium_is_bernoulli() {
        let shift = full_two(vec![1.0, 1.0]);
        let mu = shift
            .gibbs_equilibrium(&Potential::per_symbol(&[1.0, 0.0]))
            .unwrap();
        let p0 = 0.7310585786300049; // e / (1 + e)
        assert!((mu.stationary()[0] - p0).abs() < 1e-12);
        for row in mu.transition() {
            assert!((row[0] - p0).abs() < 1e-12);
            assert!((row[1] - (1.0 - p0)).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_mean_equilibrium_is_parry() {
        let mu = golden_mean(vec![1.0, 1.0])
            .gibbs_equilibrium(&Potential::constant(0.0))
            .unwrap();
        assert!((mu.stationary()[0] - 0.7236067977499789).abs() < 1e-12);
        assert!((mu.shift_entropy() - LOG_PHI).abs() < 1e-12);
        assert_eq!(mu.transition()[1][1], 0.0);
    }

    #[test]
    fn equilibrium_attains_the_pressure() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let f = Potential::per_symbol(&[0.5, -0.3]);
        let pressure = shift.bowen_pressure(&f).unwrap();
        let mu = shift.gibbs_equilibrium(&f).unwrap();
        let attained = mu.flow_entropy(&shift) + mu.flow_average(&shift, &f).unwrap();
        assert!((attained - pressure).abs() < 1e-9);
    }

    #[test]
    fn flow_entropy_examples() {
        let uniform = |shift: &ShiftSystem| {
            MarkovMeasure::new(
                shift,
                vec![0.5, 0.5],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            )
            .unwrap()
        };
        let unit = full_two(vec![1.0, 1.0]);
        assert!((uniform(&unit).flow_entropy(&unit) - std::f64::consts::LN_2).abs() < 1e-15);

        let stretched = full_two(vec![1.0, 2.0]);
        assert!((uniform(&stretched).flow_entropy(&stretched) - 0.46209812037329684).abs() < 1e-15);

        // deterministic two-cycle: zero entropy
        let cycle = ShiftSystem::new(vec![vec![0, 1], vec![1, 0]], vec![1.0, 1.0]).unwrap();
        let mu = MarkovMeasure::new(
            &cycle,
            vec![0.5, 0.5],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(mu.shift_entropy(), 0.0);
    }

    #[test]
    fn flow_average_weights_time_by_the_roof() {
        let shift = full_two(vec![1.0, 2.0]);
        let mu = MarkovMeasure::new(
            &shift,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let avg = mu
            .flow_average(&shift, &Potential::per_symbol(&[1.0, 0.0]))
            .unwrap();
        assert!((avg - 1.0 / 3.0).abs() < 1e-15);

        let mut deep = std::collections::HashMap::new();
        deep.insert(vec![0u8, 1u8], 1.0);
        let err = mu
            .flow_average(&shift, &Potential::cylinder(2, deep).unwrap())
            .unwrap_err();
        assert!(err.to_string().contains("depth-1"));
    }

    #[test]
    fn depth_two_flow_expectation_is_a_visit_frequency() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let mu = shift.gibbs_equilibrium(&Potential::constant(0.0)).unwrap();
        let mut weights = std::collections::HashMap::new();
        weights.insert(vec![0u8, 1u8], 1.0);
        let obs = Potential::cylinder(2, weights).unwrap();
        let got = mu.flow_expectation(&shift, &obs).unwrap();
        let expected = mu.stationary()[0] * mu.transition()[0][1] * shift.roof(0)
            / mu.mean_roof(&shift);
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn flow_average_matches_a_long_trajectory() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let f = Potential::per_symbol(&[0.2, -0.4]);
        let mu = shift.gibbs_equilibrium(&f).unwrap();
        let expected = mu
            .flow_average(&shift, &Potential::per_symbol(&[1.0, 0.0]))
            .unwrap();

        // simulate the chain and time-average the indicator of symbol 0
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut state = 0usize;
        let mut time_in_zero = 0.0;
        let mut total_time = 0.0;
        for _ in 0..1_000_000 {
            if state == 0 {
                time_in_zero += shift.roof(state);
            }
            total_time += shift.roof(state);
            let u: f64 = rng.gen_range(0.0..1.0);
            let mut acc = 0.0;
            let row = &mu.transition()[state];
            state = row.len() - 1;
            for (j, &q) in row.iter().enumerate() {
                acc += q;
                if u < acc {
                    state = j;
                    break;
                }
            }
        }
        assert!((time_in_zero / total_time - expected).abs() < 5e-3);
    }

    #[test]
    fn sampled_measures_obey_the_variational_bound() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let f = Potential::per_symbol(&[0.4, -0.1]);
        let pressure = shift.bowen_pressure(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mu = MarkovMeasure::sample(&shift, &mut rng).unwrap();
            let value = mu.flow_entropy(&shift) + mu.flow_average(&shift, &f).unwrap();
            assert!(value <= pressure + 1e-9);
        }
        let eq = shift.gibbs_equilibrium(&f).unwrap();
        let attained = eq.flow_entropy(&shift) + eq.flow_average(&shift, &f).unwrap();
        assert!(pressure - attained < 1e-9);
    }

    #[test]
    fn measure_validation_rejections() {
        let shift = golden_mean(vec![1.0, 1.0]);
        let err = MarkovMeasure::new(
            &shift,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.6], vec![1.0, 0.0]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("sums to"));

        let err = MarkovMeasure::new(
            &shift,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not an allowed edge"));

        let err = MarkovMeasure::new(
            &shift,
            vec![0.9, 0.1],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("stationarity fails"));
    }
}
