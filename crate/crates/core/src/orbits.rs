//! Closed orbits, weight potentials, and the weighted orbit sums the pressure
//! estimators are built from.
//!
//! A `ClosedOrbit` is backend-agnostic: a class label, a positive length, and
//! a cache of line integrals for every potential registered at enumeration
//! time. Orbit sums then never touch backend geometry; they only select by
//! length and combine cached integrals through a stable log-sum-exp.

use crate::error::{Error, Result};
use crate::numeric::LogSum;
use crate::words::ConjugacyClass;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// A point of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

/// Euclidean components of a tangent vector along a unit-speed geodesic; its
/// Euclidean norm equals the height `y` of the base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HTangent {
    pub dx: f64,
    pub dy: f64,
}

/// Callback form of a sampled potential: value at (point, direction).
pub type SampledFn = Arc<dyn Fn(HPoint, HTangent) -> f64 + Send + Sync>;

/// A weight potential evaluated along closed orbits.
///
/// * `Constant(c)` integrates to exactly `c * length`.
/// * `CylinderWeights` is locally constant on symbol windows of the given
///   depth; keys are symbol codes (shift symbols, or `2*gen + inverse` for
///   free-group letters). Symbolic backends integrate it with the roof as the
///   time weight; the hyperbolic backend splits orbit time uniformly over the
///   letters of the canonical word, which makes symmetrized weight maps
///   orientation-safe.
/// * `Sampled` is a pointwise callback integrated by midpoint quadrature
///   along the geodesic axis. With `quadrature_step = None` the step defaults
///   per orbit to `length / 1024`, capped at 1e-2. The callback is evaluated
///   on the canonical axis of the class representative; only group-invariant
///   callbacks are geometrically meaningful, and that responsibility sits
///   with the caller.
#[derive(Clone)]
pub enum Potential {
    Constant(f64),
    CylinderWeights {
        depth: usize,
        weights: HashMap<Vec<u8>, f64>,
    },
    Sampled {
        callback: SampledFn,
        quadrature_step: Option<f64>,
    },
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Potential::Constant(c)
    }

    /// Depth-1 weights given per symbol code.
    pub fn per_symbol(values: &[f64]) -> Self {
        let weights = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (vec![i as u8], v))
            .collect();
        Potential::CylinderWeights { depth: 1, weights }
    }

    pub fn cylinder(depth: usize, weights: HashMap<Vec<u8>, f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidPotential("cylinder depth must be positive".into()));
        }
        for key in weights.keys() {
            if key.len() != depth {
                return Err(Error::InvalidPotential(format!(
                    "cylinder key length {} does not match depth {depth}",
                    key.len()
                )));
            }
        }
        Ok(Potential::CylinderWeights { depth, weights })
    }

    pub fn sampled(callback: SampledFn, quadrature_step: Option<f64>) -> Result<Self> {
        if let Some(step) = quadrature_step {
            if !(step > 0.0) {
                return Err(Error::InvalidPotential(
                    "quadrature step must be positive".into(),
                ));
            }
        }
        Ok(Potential::Sampled { callback, quadrature_step })
    }

    /// Largest absolute weight over the given value set (used for sup-norm
    /// checks on basis observables). Sampled callbacks cannot be bounded here
    /// and report `None`.
    pub fn sup_norm_hint(&self) -> Option<f64> {
        match self {
            Potential::Constant(c) => Some(c.abs()),
            Potential::CylinderWeights { weights, .. } => {
                Some(weights.values().fold(0.0f64, |m, v| m.max(v.abs())))
            }
            Potential::Sampled { .. } => None,
        }
    }

    /// Pointwise sum with another potential, where representable exactly
    /// (constants and equal-depth cylinder weights).
    pub fn add(&self, other: &Potential) -> Result<Potential> {
        use Potential::*;
        match (self, other) {
            (Constant(a), Constant(b)) => Ok(Constant(a + b)),
            (Constant(c), CylinderWeights { depth, weights })
            | (CylinderWeights { depth, weights }, Constant(c)) => {
                let shifted = weights.iter().map(|(k, v)| (k.clone(), v + c)).collect();
                Ok(CylinderWeights { depth: *depth, weights: shifted })
            }
            (
                CylinderWeights { depth: d1, weights: w1 },
                CylinderWeights { depth: d2, weights: w2 },
            ) if d1 == d2 => {
                let mut sum = w1.clone();
                for (k, v) in w2 {
                    *sum.entry(k.clone()).or_insert(0.0) += v;
                }
                Ok(CylinderWeights { depth: *d1, weights: sum })
            }
            _ => Err(Error::InvalidPotential(
                "potential sum is only defined for constants and equal-depth cylinder weights"
                    .into(),
            )),
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Constant(c) => write!(f, "Constant({c})"),
            Potential::CylinderWeights { depth, weights } => {
                write!(f, "CylinderWeights(depth={depth}, {} keys)", weights.len())
            }
            Potential::Sampled { quadrature_step, .. } => {
                write!(f, "Sampled(step={quadrature_step:?})")
            }
        }
    }
}

/// An ordered, named collection of potentials. The position of a potential in
/// the set is the index under which its integrals are cached on every orbit.
#[derive(Clone, Debug, Default)]
pub struct PotentialSet {
    items: Vec<(String, Potential)>,
}

impl PotentialSet {
    pub fn new() -> Self {
        PotentialSet { items: Vec::new() }
    }

    /// Register a potential; returns its cache index. Names must be unique.
    pub fn push(&mut self, name: impl Into<String>, p: Potential) -> Result<usize> {
        let name = name.into();
        if self.items.iter().any(|(n, _)| *n == name) {
            return Err(Error::InvalidPotential(format!(
                "duplicate potential name '{name}'"
            )));
        }
        self.items.push((name, p));
        Ok(self.items.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, index: usize) -> Option<&Potential> {
        self.items.get(index).map(|(_, p)| p)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.items.get(index).map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Potential)> {
        self.items.iter().map(|(n, p)| (n.as_str(), p))
    }
}

/// Class label of a closed orbit: a symbolic necklace (canonical rotation of
/// an admissible cyclic symbol word) or a free-group conjugacy class.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum OrbitClass {
    Necklace(Vec<u8>),
    Free(ConjugacyClass),
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitClass::Necklace(symbols) => {
                for &s in symbols {
                    if s < 10 {
                        write!(f, "{s}")?;
                    } else {
                        write!(f, "({s})")?;
                    }
                }
                Ok(())
            }
            OrbitClass::Free(class) => write!(f, "{class}"),
        }
    }
}

/// One closed orbit: class label, period, primitivity, and cached integrals
/// aligned with the `PotentialSet` the enumeration was given.
#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    class: OrbitClass,
    length: f64,
    primitive: bool,
    integrals: Vec<f64>,
}

impl ClosedOrbit {
    pub fn new(class: OrbitClass, length: f64, primitive: bool, integrals: Vec<f64>) -> Self {
        assert!(length > 0.0, "orbit length must be positive");
        ClosedOrbit { class, length, primitive, integrals }
    }

    pub fn class(&self) -> &OrbitClass {
        &self.class
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn primitive(&self) -> bool {
        self.primitive
    }

    /// Cached line integral of the potential registered at `index`.
    pub fn integral(&self, index: usize) -> Result<f64> {
        self.integrals
            .get(index)
            .copied()
            .ok_or(Error::MissingIntegral { index })
    }

    pub fn integrals(&self) -> &[f64] {
        &self.integrals
    }

    /// Time average of the potential at `index` along the orbit.
    pub fn time_average(&self, index: usize) -> Result<f64> {
        Ok(self.integral(index)? / self.length)
    }
}

/// Which orbits enter a weighted sum at threshold `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SumMode {
    /// All orbits with `length <= t`.
    Cumulative,
    /// Orbits with `t < length <= t + eps`.
    Window(f64),
}

/// `log sum_orbits exp(integral of f)` over the cumulative or windowed
/// selection at `t`.
///
/// The reduction is a parallel merge of block-local log-sum-exp accumulators;
/// block boundaries change the result only at machine-epsilon scale, far
/// inside the documented 1e-10 reproducibility bound. An empty selection is
/// an error, never negative infinity.
pub fn weighted_orbit_sum(
    orbits: &[ClosedOrbit],
    potential_index: usize,
    t: f64,
    mode: SumMode,
) -> Result<f64> {
    assert!(t > 0.0, "threshold must be positive");
    if let SumMode::Window(eps) = mode {
        assert!(eps > 0.0, "window width must be positive");
    }
    let selected = |orbit: &ClosedOrbit| match mode {
        SumMode::Cumulative => orbit.length <= t,
        SumMode::Window(eps) => orbit.length > t && orbit.length <= t + eps,
    };
    let total = orbits
        .par_iter()
        .try_fold(LogSum::new, |mut acc, orbit| {
            if selected(orbit) {
                acc.push(orbit.integral(potential_index)?);
            }
            Ok::<LogSum, Error>(acc)
        })
        .try_reduce(LogSum::new, |a, b| Ok(a.merge(b)))?;
    total.value().ok_or_else(|| {
        Error::EmptyWindow(match mode {
            SumMode::Cumulative => format!("no orbits with length <= {t}"),
            SumMode::Window(eps) => format!("no orbits with {t} < length <= {}", t + eps),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_orbit(length: f64, integrals: Vec<f64>) -> ClosedOrbit {
        ClosedOrbit::new(OrbitClass::Necklace(vec![0]), length, true, integrals)
    }

    #[test]
    fn two_zero_weight_orbits_sum_to_log_two() {
        let orbits = vec![plain_orbit(1.0, vec![0.0]), plain_orbit(2.0, vec![0.0])];
        let s = weighted_orbit_sum(&orbits, 0, 2.5, SumMode::Cumulative).unwrap();
        assert!((s - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn window_selects_half_open_interval() {
        let orbits = vec![
            plain_orbit(1.0, vec![0.0]),
            plain_orbit(2.0, vec![0.0]),
            plain_orbit(3.0, vec![0.0]),
        ];
        // (1, 2]: exactly the middle orbit.
        let s = weighted_orbit_sum(&orbits, 0, 1.0, SumMode::Window(1.0)).unwrap();
        assert!(s.abs() < 1e-14);
        // (2, 2.5]: empty.
        let err = weighted_orbit_sum(&orbits, 0, 2.0, SumMode::Window(0.5)).unwrap_err();
        assert!(err.to_string().starts_with("empty orbit window"));
    }

    #[test]
    fn empty_cumulative_selection_is_an_error() {
        let orbits = vec![plain_orbit(5.0, vec![0.0])];
        assert!(weighted_orbit_sum(&orbits, 0, 1.0, SumMode::Cumulative).is_err());
    }

    #[test]
    fn monotone_in_the_potential() {
        let orbits: Vec<ClosedOrbit> = (1..=40)
            .map(|i| {
                let f = (i as f64 * 0.713).sin();
                let g = f + 0.25 * (i as f64 * 1.618).cos().abs();
                plain_orbit(0.2 * i as f64, vec![f, g])
            })
            .collect();
        let sf = weighted_orbit_sum(&orbits, 0, 6.0, SumMode::Cumulative).unwrap();
        let sg = weighted_orbit_sum(&orbits, 1, 6.0, SumMode::Cumulative).unwrap();
        assert!(sg >= sf);
    }

    #[test]
    fn constant_shift_brackets() {
        // Adding a constant c >= 0 multiplies each term by exp(c * length),
        // so the log sum moves by between c * l_min and c * t.
        let orbits: Vec<ClosedOrbit> = (1..=25)
            .map(|i| {
                let len = 0.3 * i as f64;
                let f = (i as f64 * 0.9).cos();
                plain_orbit(len, vec![f, f + 0.8 * len])
            })
            .collect();
        let t = 7.0;
        let l_min = 0.3;
        let c = 0.8;
        let base = weighted_orbit_sum(&orbits, 0, t, SumMode::Cumulative).unwrap();
        let shifted = weighted_orbit_sum(&orbits, 1, t, SumMode::Cumulative).unwrap();
        assert!(shifted >= base + c * l_min - 1e-12);
        assert!(shifted <= base + c * t + 1e-12);
    }

    #[test]
    fn missing_integral_is_reported() {
        let orbits = vec![plain_orbit(1.0, vec![0.0])];
        assert!(matches!(
            weighted_orbit_sum(&orbits, 3, 2.0, SumMode::Cumulative),
            Err(Error::MissingIntegral { index: 3 })
        ));
    }

    #[test]
    fn potential_sum_rules() {
        let c = Potential::constant(1.5);
        let f = Potential::per_symbol(&[1.0, 0.0]);
        let sum = f.add(&c).unwrap();
        match sum {
            Potential::CylinderWeights { depth, weights } => {
                assert_eq!(depth, 1);
                assert_eq!(weights[&vec![0u8]], 2.5);
                assert_eq!(weights[&vec![1u8]], 1.5);
            }
            _ => panic!("expected cylinder weights"),
        }
    }
}
