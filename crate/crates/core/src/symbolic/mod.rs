//! Suspension flows over subshifts of finite type.
//!
//! The base system is an irreducible 0/1 adjacency matrix on at most 255
//! symbols; the roof (return time) and the weight potential are constant on
//! depth-1 cylinders. Closed orbits of the flow correspond to admissible
//! primitive necklaces, enumerated here through Lyndon-word representatives;
//! the exact pressure oracle lives in `transfer`.

pub mod lyndon;
mod transfer;

pub use lyndon::LyndonWords;
pub(crate) use transfer::stationary_distribution;
pub use transfer::MarkovMeasure;

use crate::error::{Error, Result};
use crate::orbits::{ClosedOrbit, OrbitClass, Potential, PotentialSet};
use rayon::prelude::*;

/// An irreducible subshift of finite type with a positive depth-1 roof.
#[derive(Clone, Debug)]
pub struct ShiftSystem {
    adjacency: Vec<Vec<bool>>,
    roof: Vec<f64>,
}

impl ShiftSystem {
    pub fn new(adjacency: Vec<Vec<u8>>, roof: Vec<f64>) -> Result<Self> {
        let m = adjacency.len();
        if m == 0 {
            return Err(Error::InvalidSystem("alphabet must be nonempty".into()));
        }
        if m > 255 {
            return Err(Error::InvalidSystem(
                "alphabets larger than 255 symbols are not supported".into(),
            ));
        }
        if adjacency.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidSystem("adjacency must be square".into()));
        }
        let mut edges = vec![vec![false; m]; m];
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                match a {
                    0 => {}
                    1 => edges[i][j] = true,
                    _ => {
                        return Err(Error::InvalidSystem(
                            "adjacency entries must be 0 or 1".into(),
                        ))
                    }
                }
            }
        }
        if roof.len() != m {
            return Err(Error::InvalidSystem(format!(
                "roof has {} entries for {m} symbols",
                roof.len()
            )));
        }
        if roof.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidSystem(
                "roof values must be positive and finite".into(),
            ));
        }
        let system = ShiftSystem { adjacency: edges, roof };
        if !system.is_irreducible() {
            return Err(Error::InvalidSystem("adjacency must be irreducible".into()));
        }
        Ok(system)
    }

    /// Full shift on `m` symbols (every transition allowed).
    pub fn full_shift(m: usize, roof: Vec<f64>) -> Result<Self> {
        ShiftSystem::new(vec![vec![1; m]; m], roof)
    }

    pub fn alphabet_size(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn roof(&self, i: usize) -> f64 {
        self.roof[i]
    }

    pub fn min_roof(&self) -> f64 {
        self.roof.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Nodes reachable from / into every node in at least one step; for a
    /// one-letter alphabet this requires the self-loop.
    fn is_irreducible(&self) -> bool {
        self.connected(|i, j| self.edge(i, j)) && self.connected(|i, j| self.edge(j, i))
    }

    fn connected(&self, step: impl Fn(usize, usize) -> bool) -> bool {
        let m = self.alphabet_size();
        let mut seen = vec![false; m];
        let mut stack: Vec<usize> = (0..m).filter(|&j| step(0, j)).collect();
        for &j in &stack {
            seen[j] = true;
        }
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && step(i, j) {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Per-symbol values of a depth-1 weight potential. Cylinder weights must
    /// cover the whole alphabet; sampled callbacks have no symbolic meaning.
    pub fn symbol_values(&self, f: &Potential) -> Result<Vec<f64>> {
        let m = self.alphabet_size();
        match f {
            Potential::Constant(c) => Ok(vec![*c; m]),
            Potential::CylinderWeights { depth: 1, weights } => (0..m)
                .map(|i| {
                    weights.get([i as u8].as_slice()).copied().ok_or_else(|| {
                        Error::InvalidPotential(format!(
                            "depth-1 potential does not cover symbol {i}"
                        ))
                    })
                })
                .collect(),
            Potential::CylinderWeights { depth, .. } => Err(Error::InvalidPotential(format!(
                "weight potentials on shift systems must have depth 1, got depth {depth}"
            ))),
            Potential::Sampled { .. } => Err(Error::InvalidPotential(
                "sampled potentials are not defined on shift systems".into(),
            )),
        }
    }

    /// All admissible words of the given length, lexicographically ordered.
    pub fn admissible_words(&self, depth: usize) -> Vec<Vec<u8>> {
        let m = self.alphabet_size();
        if depth == 0 {
            return vec![Vec::new()];
        }
        let mut words: Vec<Vec<u8>> = (0..m as u8).map(|i| vec![i]).collect();
        for _ in 1..depth {
            let mut longer = Vec::new();
            for word in &words {
                let last = *word.last().unwrap() as usize;
                for j in 0..m {
                    if self.edge(last, j) {
                        let mut extended = word.clone();
                        extended.push(j as u8);
                        longer.push(extended);
                    }
                }
            }
            words = longer;
        }
        words
    }

    /// Check that an observable makes sense on this system: cylinder keys in
    /// range and admissible, no sampled callbacks.
    pub fn validate_observable(&self, p: &Potential) -> Result<()> {
        match p {
            Potential::Constant(_) => Ok(()),
            Potential::CylinderWeights { weights, .. } => {
                let m = self.alphabet_size() as u8;
                for key in weights.keys() {
                    if key.iter().any(|&s| s >= m) {
                        return Err(Error::InvalidPotential(format!(
                            "cylinder word {key:?} uses symbols outside the alphabet"
                        )));
                    }
                    if !self.word_admissible(key) {
                        return Err(Error::InvalidPotential(format!(
                            "cylinder word {key:?} is not admissible"
                        )));
                    }
                }
                Ok(())
            }
            Potential::Sampled { .. } => Err(Error::InvalidPotential(
                "sampled potentials are not defined on shift systems".into(),
            )),
        }
    }

    fn word_admissible(&self, word: &[u8]) -> bool {
        word.windows(2)
            .all(|pair| self.edge(pair[0] as usize, pair[1] as usize))
    }

    fn cyclically_admissible(&self, word: &[u8]) -> bool {
        self.word_admissible(word)
            && self.edge(word[word.len() - 1] as usize, word[0] as usize)
    }

    /// Smallest word length whose orbits are guaranteed longer than `t_max`,
    /// i.e. enumerating up to this length captures every orbit of length
    /// `<= t_max`.
    pub fn word_length_for_horizon(&self, t_max: f64) -> usize {
        assert!(t_max > 0.0, "horizon must be positive");
        (t_max / self.min_roof()).ceil() as usize
    }

    /// Line integral of an observable along the closed orbit of an admissible
    /// necklace: each symbol contributes its roof as time weight, cylinder
    /// windows are read cyclically.
    fn orbit_integral(&self, word: &[u8], p: &Potential) -> Result<f64> {
        let length: f64 = word.iter().map(|&s| self.roof(s as usize)).sum();
        match p {
            Potential::Constant(c) => Ok(c * length),
            Potential::CylinderWeights { depth, weights } => {
                let n = word.len();
                let mut acc = 0.0;
                let mut window = Vec::with_capacity(*depth);
                for i in 0..n {
                    window.clear();
                    for k in 0..*depth {
                        window.push(word[(i + k) % n]);
                    }
                    if let Some(&w) = weights.get(&window) {
                        acc += w * self.roof(word[i] as usize);
                    }
                }
                Ok(acc)
            }
            Potential::Sampled { .. } => Err(Error::InvalidPotential(
                "sampled potentials are not defined on shift systems".into(),
            )),
        }
    }

    /// All closed orbits whose necklace has at most `max_word_len` symbols,
    /// with line integrals cached for every registered potential. Orbits are
    /// sorted by (length, necklace); enumeration is partitioned by the first
    /// symbol of the Lyndon representative, so the result does not depend on
    /// the number of worker threads.
    pub fn enumerate_orbits(
        &self,
        max_word_len: usize,
        potentials: &PotentialSet,
    ) -> Result<Vec<ClosedOrbit>> {
        if max_word_len == 0 {
            return Err(Error::InvalidArgument(
                "necklace length bound must be positive".into(),
            ));
        }
        for (_, p) in potentials.iter() {
            self.validate_observable(p)?;
        }
        let m = self.alphabet_size();
        let blocks: Vec<Vec<ClosedOrbit>> = (0..m)
            .into_par_iter()
            .map(|first| {
                let mut block = Vec::new();
                for word in LyndonWords::starting_with(m as u8, max_word_len, first as u8) {
                    if !self.cyclically_admissible(&word) {
                        continue;
                    }
                    let length: f64 = word.iter().map(|&s| self.roof(s as usize)).sum();
                    let integrals = (0..potentials.len())
                        .map(|k| self.orbit_integral(&word, potentials.get(k).unwrap()))
                        .collect::<Result<Vec<f64>>>()?;
                    block.push(ClosedOrbit::new(
                        OrbitClass::Necklace(word),
                        length,
                        true,
                        integrals,
                    ));
                }
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut orbits: Vec<ClosedOrbit> = blocks.into_iter().flatten().collect();
        orbits.sort_by(|a, b| {
            a.length()
                .partial_cmp(&b.length())
                .expect("orbit lengths are finite")
                .then_with(|| necklace(a.class()).cmp(necklace(b.class())))
        });
        Ok(orbits)
    }
}

fn necklace(class: &OrbitClass) -> &[u8] {
    match class {
        OrbitClass::Necklace(word) => word,
        OrbitClass::Free(_) => unreachable!("shift enumeration only produces necklaces"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{weighted_orbit_sum, SumMode};
    use std::collections::HashMap;

    fn full_two(roof: Vec<f64>) -> ShiftSystem {
        ShiftSystem::full_shift(2, roof).unwrap()
    }

    fn golden_mean(roof: Vec<f64>) -> ShiftSystem {
        ShiftSystem::new(vec![vec![1, 1], vec![1, 0]], roof).unwrap()
    }

    fn labels(orbits: &[ClosedOrbit]) -> Vec<String> {
        orbits.iter().map(|o| o.class().to_string()).collect()
    }

    #[test]
    fn rejects_malformed_systems() {
        let err = ShiftSystem::new(vec![vec![1, 1], vec![1]], vec![1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("adjacency must be square"));
        let err = ShiftSystem::new(vec![vec![1, 1], vec![0, 1]], vec![1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("irreducible"));
        assert!(ShiftSystem::new(vec![vec![0]], vec![1.0]).is_err());
        assert!(ShiftSystem::new(vec![vec![1, 2], vec![1, 0]], vec![1.0, 1.0]).is_err());
        assert!(ShiftSystem::new(vec![vec![1]], vec![0.0]).is_err());
        assert!(ShiftSystem::new(vec![vec![1]], vec![f64::NAN]).is_err());
        assert!(ShiftSystem::new(vec![vec![1]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn full_shift_short_orbits() {
        let shift = full_two(vec![1.0, 1.0]);
        let orbits = shift.enumerate_orbits(2, &PotentialSet::new()).unwrap();
        assert_eq!(labels(&orbits), vec!["0", "1", "01"]);
        assert_eq!(orbits[2].length(), 2.0);
        assert!(orbits.iter().all(|o| o.primitive()));
    }

    #[test]
    fn golden_mean_excludes_repeated_ones() {
        let shift = golden_mean(vec![1.0, 1.0]);
        let orbits = shift.enumerate_orbits(3, &PotentialSet::new()).unwrap();
        assert_eq!(labels(&orbits), vec!["0", "01", "001"]);
    }

    #[test]
    fn roof_weights_orbit_lengths() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let orbits = shift.enumerate_orbits(2, &PotentialSet::new()).unwrap();
        assert_eq!(labels(&orbits), vec!["0", "01"]);
        assert_eq!(orbits[1].length(), 3.0);
        assert_eq!(shift.word_length_for_horizon(6.0), 6);
        assert_eq!(shift.word_length_for_horizon(6.5), 7);
    }

    /// Independent count oracle: primitive admissible cyclic strings of exact
    /// length n, counted by brute force, come in groups of n rotations.
    fn brute_force_orbit_count(shift: &ShiftSystem, n: usize) -> usize {
        let m = shift.alphabet_size();
        let mut word = vec![0u8; n];
        let mut strings = 0usize;
        loop {
            let admissible = (0..n).all(|i| {
                shift.edge(word[i] as usize, word[(i + 1) % n] as usize)
            });
            if admissible {
                let primitive = (1..n).all(|d| {
                    !n.is_multiple_of(d) || (0..n).any(|i| word[i] != word[(i + d) % n])
                });
                if primitive {
                    strings += 1;
                }
            }
            // odometer increment
            let mut pos = n;
            loop {
                if pos == 0 {
                    assert_eq!(strings % n, 0);
                    return strings / n;
                }
                pos -= 1;
                if word[pos] as usize + 1 < m {
                    word[pos] += 1;
                    break;
                }
                word[pos] = 0;
            }
        }
    }

    #[test]
    fn enumeration_matches_brute_force_counts() {
        for shift in [full_two(vec![1.0, 1.0]), golden_mean(vec![1.0, 1.0])] {
            let orbits = shift.enumerate_orbits(10, &PotentialSet::new()).unwrap();
            for n in 1..=10usize {
                let enumerated = orbits
                    .iter()
                    .filter(|o| necklace(o.class()).len() == n)
                    .count();
                assert_eq!(enumerated, brute_force_orbit_count(&shift, n), "length {n}");
            }
        }
    }

    #[test]
    fn unweighted_cumulative_sum_counts_orbits() {
        let shift = full_two(vec![1.0, 1.0]);
        let mut potentials = PotentialSet::new();
        let zero = potentials.push("zero", Potential::constant(0.0)).unwrap();
        let orbits = shift.enumerate_orbits(6, &potentials).unwrap();
        assert_eq!(orbits.len(), 23);
        let s = weighted_orbit_sum(&orbits, zero, 6.0, SumMode::Cumulative).unwrap();
        assert!((s - 3.1354942159291497).abs() < 1e-12); // log 23
    }

    #[test]
    fn admissible_word_counts() {
        let shift = golden_mean(vec![1.0, 1.0]);
        assert_eq!(shift.admissible_words(1).len(), 2);
        assert_eq!(shift.admissible_words(2).len(), 3);
        assert_eq!(shift.admissible_words(3).len(), 5);
        assert_eq!(shift.admissible_words(4).len(), 8);
    }

    #[test]
    fn depth_two_cylinder_integrals() {
        let shift = golden_mean(vec![1.0, 2.0]);
        let mut potentials = PotentialSet::new();
        let mut weights = HashMap::new();
        weights.insert(vec![0u8, 1u8], 1.0);
        let idx = potentials
            .push("visits01", Potential::cylinder(2, weights).unwrap())
            .unwrap();
        let orbits = shift.enumerate_orbits(3, &potentials).unwrap();
        let by_label: HashMap<String, f64> = orbits
            .iter()
            .map(|o| (o.class().to_string(), o.integral(idx).unwrap()))
            .collect();
        // the window [0,1] starts on symbol 0, which carries roof 1
        assert_eq!(by_label["0"], 0.0);
        assert_eq!(by_label["01"], 1.0);
        assert_eq!(by_label["001"], 1.0);
    }

    #[test]
    fn observable_validation_catches_bad_cylinders() {
        let shift = golden_mean(vec![1.0, 1.0]);
        let mut weights = HashMap::new();
        weights.insert(vec![1u8, 1u8], 2.0);
        let p = Potential::cylinder(2, weights).unwrap();
        let err = shift.validate_observable(&p).unwrap_err();
        assert!(err.to_string().contains("not admissible"));

        let sparse = Potential::per_symbol(&[1.0]);
        let err = shift.symbol_values(&sparse).unwrap_err();
        assert!(err.to_string().contains("does not cover symbol 1"));
    }
}
