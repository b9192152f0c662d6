//! Schottky surface groups: free groups of SL(2, R) matrices acting on the
//! upper half-plane, with closed geodesics enumerated as conjugacy classes.
//!
//! A system is k generator matrices plus 2k pairwise disjoint boundary disks
//! indexed by letter code; the letter x maps the exterior of the disk of x^-1
//! into the disk of x. When that mapping property can be verified numerically
//! the enumerator prunes with a certified length bound: a partial product
//! maps the next letter's disk into a nested image disk, and a cyclic word's
//! multiplier at its attracting fixed point is controlled by the image radius
//! up to a distortion constant fixed by the smallest disk gap — so every
//! completion of the prefix has length >= ln(first disk radius / image
//! radius) - log K. Otherwise enumeration falls back to a combinatorial depth
//! cap and says so.

mod mobius;

pub use mobius::{balanced_product, isometric_circle, map_disk, Disk, GeodesicAxis, Mat2};

use crate::error::{Error, Result};
use crate::orbits::{ClosedOrbit, OrbitClass, Potential, PotentialSet};
use crate::words::{canonicalize, ConjugacyClass, GeneratorWord, Letter};
use rayon::prelude::*;

const DET_TOL: f64 = 1e-12;
/// Slack for the numeric disk-containment certification.
const CONTAINMENT_SLACK: f64 = 1e-9;
/// Disk gaps below this make the certified distortion constant useless.
const MIN_CERTIFIED_GAP: f64 = 1e-9;
/// Word length for the constructor's hyperbolicity spot check.
const SPOT_CHECK_LEN: usize = 6;
/// Hard recursion guard for the certified search; reaching it means the disk
/// contraction is too weak to enumerate the requested horizon.
const MAX_SEARCH_DEPTH: usize = 4096;

#[derive(Clone, Debug)]
enum Pruning {
    /// Per first letter f: `log_k[f]` bounds the log-distortion of any
    /// admissible word on the disk of f (its pole stays a disk gap away), so
    /// a prefix whose nested image disk has radius rad certifies that every
    /// cyclically reduced completion has length >= ln(rho_f / rad) - log_k[f].
    Certified { log_k: Vec<f64> },
    DepthCap,
}

/// Per-search-block pruning state: the first letter's disk radius (log) and
/// the horizon plus that block's distortion allowance.
#[derive(Clone, Copy)]
struct ImageBudget {
    log_rho_first: f64,
    allowance: f64,
}

/// A Schottky group with its ping-pong disks.
#[derive(Clone, Debug)]
pub struct SchottkySystem {
    generators: Vec<Mat2>,
    /// By letter code: images of m(x) land inside `disks[code(x)]`.
    disks: Vec<Disk>,
    letter_matrices: Vec<Mat2>,
    letter_lengths: Vec<f64>,
    pruning: Pruning,
}

fn inv_code(code: u8) -> u8 {
    code ^ 1
}

fn translation_length(trace: f64) -> f64 {
    2.0 * (trace.abs() / 2.0).acosh()
}

impl SchottkySystem {
    pub fn new(generators: Vec<Mat2>, disks: Vec<Disk>) -> Result<Self> {
        let k = generators.len();
        if k == 0 {
            return Err(Error::InvalidSystem("at least one generator required".into()));
        }
        if k > 127 {
            return Err(Error::InvalidSystem("too many generators".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            let entries = [g.a, g.b, g.c, g.d];
            if entries.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidSystem(format!(
                    "generator {i} has non-finite entries"
                )));
            }
            if (g.det() - 1.0).abs() > DET_TOL {
                return Err(Error::InvalidSystem(format!(
                    "generator {i} must have determinant 1 (det = {})",
                    g.det()
                )));
            }
        }
        if disks.len() != 2 * k {
            return Err(Error::InvalidSystem(format!(
                "expected {} pairing disks, got {}",
                2 * k,
                disks.len()
            )));
        }
        for (i, disk) in disks.iter().enumerate() {
            if !disk.center.is_finite() || !(disk.radius > 0.0) || !disk.radius.is_finite() {
                return Err(Error::InvalidSystem(format!("pairing disk {i} is degenerate")));
            }
        }
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                if !disks[i].disjoint_from(&disks[j]) {
                    return Err(Error::InvalidSystem(format!(
                        "pairing disks {i} and {j} are not disjoint"
                    )));
                }
            }
        }
        let letter_matrices: Vec<Mat2> = (0..2 * k)
            .map(|code| {
                let g = &generators[code / 2];
                if code % 2 == 0 { *g } else { g.inverse_sl2() }
            })
            .collect();
        spot_check_hyperbolic(&letter_matrices)?;
        let letter_lengths: Vec<f64> = letter_matrices
            .iter()
            .map(|m| translation_length(m.trace()))
            .collect();
        let pruning = certify_pruning(&letter_matrices, &disks);
        Ok(SchottkySystem { generators, disks, letter_matrices, letter_lengths, pruning })
    }

    /// The built-in example group: two conjugates of diag(2, 1/2), the second
    /// obtained from the first by the half-turn z -> -1/z, so both letters
    /// have trace 5/2 (translation length 2 ln 2) while the product ab has
    /// trace -11/5 (length 2 arccosh(11/10) ~ 0.887). The short product keeps
    /// the class spectrum dense enough that windowed log-sums stay populated
    /// well before t = 12. Pairing disks are the isometric circles; with
    /// A = D = 5/4 the off-diagonal entries satisfy B - C = sqrt(21/5) and
    /// B C = 9/16, giving determinant exactly 1.
    pub fn default_example() -> SchottkySystem {
        let sum = 6.45f64.sqrt(); // B + C
        let diff = 4.2f64.sqrt(); // B - C
        let b_entry = (sum + diff) / 2.0;
        let c_entry = (sum - diff) / 2.0;
        let a = Mat2::new(1.25, b_entry, c_entry, 1.25);
        let b = Mat2::new(1.25, -c_entry, -b_entry, 1.25);
        let disks = vec![
            Disk::new(1.25 / c_entry, 1.0 / c_entry),
            Disk::new(-1.25 / c_entry, 1.0 / c_entry),
            Disk::new(-1.25 / b_entry, 1.0 / b_entry),
            Disk::new(1.25 / b_entry, 1.0 / b_entry),
        ];
        SchottkySystem::new(vec![a, b], disks).expect("built-in example group is valid")
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn letter_count(&self) -> usize {
        self.letter_matrices.len()
    }

    pub fn generators(&self) -> &[Mat2] {
        &self.generators
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn letter_matrix(&self, code: u8) -> &Mat2 {
        &self.letter_matrices[code as usize]
    }

    pub fn min_letter_length(&self) -> f64 {
        self.letter_lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether enumeration runs under the certified length bound rather than
    /// the fallback depth cap.
    pub fn certified_pruning(&self) -> bool {
        matches!(self.pruning, Pruning::Certified { .. })
    }

    /// Ordered product of generator matrices over a freely reduced word.
    pub fn word_matrix(&self, word: &GeneratorWord) -> Result<Mat2> {
        let k = self.generators.len();
        let mats = word
            .letters()
            .iter()
            .map(|l| {
                if (l.gen as usize) < k {
                    Ok(self.letter_matrices[l.code() as usize])
                } else {
                    Err(Error::InvalidArgument(format!(
                        "generator index {} out of range for {k} generators",
                        l.gen
                    )))
                }
            })
            .collect::<Result<Vec<Mat2>>>()?;
        Ok(balanced_product(&mats))
    }

    /// Geodesic length of a conjugacy class: the translation length of the
    /// primitive root (trace of the canonical representative) times the power.
    pub fn class_length(&self, class: &ConjugacyClass) -> Result<f64> {
        let matrix = self.word_matrix(class.primitive_root())?;
        let tr = matrix.trace();
        if tr.abs() <= 2.0 {
            return Err(Error::NonHyperbolic { trace_abs: tr.abs() });
        }
        Ok(class.power() as f64 * translation_length(tr))
    }

    /// Cylinder observables on letter codes must stay inside the alphabet and
    /// contain no cancelling adjacent pair (such a window never occurs on a
    /// reduced cyclic word). Sampled and constant potentials always pass.
    pub fn validate_observable(&self, p: &Potential) -> Result<()> {
        if let Potential::CylinderWeights { weights, .. } = p {
            let letters = self.letter_count() as u8;
            for key in weights.keys() {
                if key.iter().any(|&c| c >= letters) {
                    return Err(Error::InvalidPotential(format!(
                        "cylinder word {key:?} uses letters outside the alphabet"
                    )));
                }
                if key.windows(2).any(|p| p[1] == inv_code(p[0])) {
                    return Err(Error::InvalidPotential(format!(
                        "cylinder word {key:?} contains a cancelling pair and never matches"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Line integral of a potential over the closed geodesic of a class.
    ///
    /// Constants integrate exactly; cylinder weights split orbit time
    /// uniformly over the letters of the canonical word (orientation-safe
    /// only for weight maps symmetric under inversion — caller's contract);
    /// sampled callbacks are integrated by midpoint quadrature along the axis
    /// of the canonical primitive representative, once per period, times the
    /// power.
    pub fn orbit_integral(&self, class: &ConjugacyClass, f: &Potential) -> Result<f64> {
        self.validate_observable(f)?;
        let matrix = self.word_matrix(class.primitive_root())?;
        let tr = matrix.trace();
        if tr.abs() <= 2.0 {
            return Err(Error::NonHyperbolic { trace_abs: tr.abs() });
        }
        let primitive_length = translation_length(tr);
        let total_length = class.power() as f64 * primitive_length;
        let root_codes: Vec<u8> =
            class.primitive_root().letters().iter().map(|l| l.code()).collect();
        integral_on_axis(&root_codes, &matrix, primitive_length, class.power(), total_length, f)
    }

    /// All primitive conjugacy classes (orientation collapsed) of geodesic
    /// length at most `t_max`, each exactly once, sorted by (length, word),
    /// with line integrals cached for the registered potentials.
    ///
    /// The search runs over strict Lyndon representatives of cyclically
    /// reduced words, partitioned by first letter (thread-count independent),
    /// pruned by the certified per-step length bound when available.
    pub fn enumerate_classes(
        &self,
        t_max: f64,
        potentials: &PotentialSet,
    ) -> Result<Vec<ClosedOrbit>> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument("length horizon must be positive".into()));
        }
        for (_, p) in potentials.iter() {
            self.validate_observable(p)?;
        }
        let max_depth = match &self.pruning {
            Pruning::Certified { .. } => MAX_SEARCH_DEPTH,
            Pruning::DepthCap => {
                let cap = (t_max / self.min_letter_length()).ceil() as usize;
                log::warn!(
                    "certified pruning bound unavailable; falling back to exhaustive \
                     search of words up to length {cap}"
                );
                cap
            }
        };
        let mut classes = self.search(max_depth, Some(t_max), potentials)?;
        sort_classes(&mut classes);
        Ok(classes)
    }

    /// Every conjugacy class (powers included, orientation collapsed) whose
    /// cyclically reduced word has at most `max_len` letters, ignoring
    /// geodesic length. This is the slow exhaustive variant used to
    /// cross-check enumeration counts against the free-group combinatorics.
    pub fn enumerate_classes_by_word_length(
        &self,
        max_len: usize,
        potentials: &PotentialSet,
    ) -> Result<Vec<ClosedOrbit>> {
        if max_len == 0 {
            return Err(Error::InvalidArgument("word length bound must be positive".into()));
        }
        for (_, p) in potentials.iter() {
            self.validate_observable(p)?;
        }
        let primitives = self.search(max_len, None, potentials)?;
        let mut classes = Vec::with_capacity(primitives.len() * 2);
        for orbit in &primitives {
            let root = match orbit.class() {
                OrbitClass::Free(class) => class.primitive_root().clone(),
                OrbitClass::Necklace(_) => unreachable!("schottky search emits free classes"),
            };
            let n = root.len();
            for power in 2..=(max_len / n.max(1)) as u32 {
                let mut letters = Vec::with_capacity(n * power as usize);
                for _ in 0..power {
                    letters.extend_from_slice(root.letters());
                }
                let word = GeneratorWord::from_letters(letters)?;
                let class = canonicalize(&word, true)?;
                let length = self.class_length(&class)?;
                let integrals = (0..potentials.len())
                    .map(|i| self.orbit_integral(&class, potentials.get(i).unwrap()))
                    .collect::<Result<Vec<f64>>>()?;
                classes.push(ClosedOrbit::new(OrbitClass::Free(class), length, false, integrals));
            }
        }
        classes.extend(primitives);
        sort_classes(&mut classes);
        Ok(classes)
    }

    /// DFS over strict Lyndon words of cyclically reduced form, one parallel
    /// block per first letter.
    fn search(
        &self,
        max_depth: usize,
        horizon: Option<f64>,
        potentials: &PotentialSet,
    ) -> Result<Vec<ClosedOrbit>> {
        let letters = self.letter_count() as u8;
        let blocks: Vec<Vec<ClosedOrbit>> = (0..letters)
            .into_par_iter()
            .map(|first| {
                let mut block = Vec::new();
                let mut word = vec![first];
                let budget = match (&self.pruning, horizon) {
                    (Pruning::Certified { log_k }, Some(t_max)) => Some(ImageBudget {
                        log_rho_first: self.disks[first as usize].radius.ln(),
                        // tiny slack so float drift can't prune a borderline class
                        allowance: t_max + log_k[first as usize] + 1e-9,
                    }),
                    _ => None,
                };
                let prefix = self.letter_matrices[first as usize];
                self.explore(&mut word, &prefix, budget, max_depth, horizon, potentials, &mut block)?;
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn explore(
        &self,
        word: &mut Vec<u8>,
        prefix: &Mat2,
        budget: Option<ImageBudget>,
        max_depth: usize,
        horizon: Option<f64>,
        potentials: &PotentialSet,
        out: &mut Vec<ClosedOrbit>,
    ) -> Result<()> {
        let first = word[0];
        let last = *word.last().unwrap();

        if inv_code(last) != first
            && is_strict_lyndon(word)
            && survives_inversion_dedupe(word)
        {
            // cyclically reduced: a candidate class (emit re-checks the
            // exact length against the horizon)
            self.emit(word, horizon, potentials, out)?;
        }

        if word.len() >= max_depth {
            // With a certified budget the image radii alone bound the search,
            // so running into the guard means contraction too weak to finish.
            return match (&self.pruning, horizon) {
                (Pruning::Certified { .. }, Some(_)) => Err(Error::InvalidSystem(
                    "length-bounded search exceeded the depth guard; \
                     disk contraction is too weak for this horizon"
                        .into(),
                )),
                _ => Ok(()),
            };
        }
        for next in first..self.letter_count() as u8 {
            if next == inv_code(last) {
                continue;
            }
            if let Some(b) = &budget {
                // The prefix maps the next letter's disk to a nested image;
                // once the certified length floor of every completion passes
                // the horizon, the whole subtree is out of reach.
                if let Some(image) = map_disk(prefix, &self.disks[next as usize]) {
                    if b.log_rho_first - image.radius.ln() > b.allowance {
                        continue;
                    }
                }
            }
            word.push(next);
            let extended = prefix.mul(&self.letter_matrices[next as usize]);
            self.explore(word, &extended, budget, max_depth, horizon, potentials, out)?;
            word.pop();
        }
        Ok(())
    }

    fn emit(
        &self,
        word: &[u8],
        horizon: Option<f64>,
        potentials: &PotentialSet,
        out: &mut Vec<ClosedOrbit>,
    ) -> Result<()> {
        let mats: Vec<Mat2> = word.iter().map(|&c| self.letter_matrices[c as usize]).collect();
        let matrix = balanced_product(&mats);
        let tr = matrix.trace();
        if tr.abs() <= 2.0 {
            return Err(Error::NonHyperbolic { trace_abs: tr.abs() });
        }
        let length = translation_length(tr);
        if let Some(t_max) = horizon {
            if length > t_max {
                return Ok(());
            }
        }
        let letters: Vec<Letter> = word.iter().map(|&c| Letter::from_code(c)).collect();
        let class = canonicalize(&GeneratorWord::from_letters(letters)?, true)?;
        debug_assert!(class.is_primitive());
        let integrals = (0..potentials.len())
            .map(|i| {
                integral_on_axis(word, &matrix, length, 1, length, potentials.get(i).unwrap())
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(ClosedOrbit::new(OrbitClass::Free(class), length, true, integrals));
        Ok(())
    }
}

/// `|trace| > 2` for every freely reduced word up to the spot-check length.
fn spot_check_hyperbolic(letter_matrices: &[Mat2]) -> Result<()> {
    let letters = letter_matrices.len() as u8;
    let mut stack: Vec<(u8, Mat2, usize)> = (0..letters)
        .map(|c| (c, letter_matrices[c as usize], 1))
        .collect();
    while let Some((last, matrix, len)) = stack.pop() {
        if matrix.trace().abs() <= 2.0 {
            return Err(Error::InvalidSystem(format!(
                "non-hyperbolic word of length {len} (|trace| = {}); not a Schottky group",
                matrix.trace().abs()
            )));
        }
        if len < SPOT_CHECK_LEN {
            for next in 0..letters {
                if next != inv_code(last) {
                    stack.push((next, matrix.mul(&letter_matrices[next as usize]), len + 1));
                }
            }
        }
    }
    Ok(())
}

/// Try to certify the ping-pong contraction data. For each ordered letter
/// pair (x, y) with y != x^-1 we need the pole of m(x) outside the disk of y
/// and the m(x)-image of that disk inside the disk of x — then partial
/// products act on nested disks whose radii certify a length floor. A cyclic
/// word w starting with f fixes a point inside w(D_f), where its derivative
/// is exp(-length); the derivative of a Mobius map on D_f varies by at most
/// K = (1 + 2 rho_f / gap)^2 because the pole of w sits in another disk, at
/// least the smallest disk gap away. Hence length >= ln(rho_f / image
/// radius) - ln K, the bound `explore` prunes with.
fn certify_pruning(letter_matrices: &[Mat2], disks: &[Disk]) -> Pruning {
    let n = letter_matrices.len();
    for x in 0..n {
        let iso = match isometric_circle(&letter_matrices[x]) {
            Some(disk) => disk,
            None => return Pruning::DepthCap,
        };
        for y in 0..n {
            if y == inv_code(x as u8) as usize {
                continue;
            }
            if disks[y].contains_point(iso.center) {
                return Pruning::DepthCap;
            }
            let image = match map_disk(&letter_matrices[x], &disks[y]) {
                Some(disk) => disk,
                None => return Pruning::DepthCap,
            };
            if !disks[x].contains_disk(&image, CONTAINMENT_SLACK) {
                return Pruning::DepthCap;
            }
        }
    }
    let mut log_k = Vec::with_capacity(n);
    for f in 0..n {
        let mut gap = f64::INFINITY;
        for j in 0..n {
            if j != f {
                let g = (disks[f].center - disks[j].center).abs()
                    - disks[f].radius
                    - disks[j].radius;
                gap = gap.min(g);
            }
        }
        if !(gap > MIN_CERTIFIED_GAP) {
            return Pruning::DepthCap;
        }
        log_k.push(2.0 * (1.0 + 2.0 * disks[f].radius / gap).ln());
    }
    Pruning::Certified { log_k }
}

/// Strictly least among its rotations (hence primitive).
fn is_strict_lyndon(word: &[u8]) -> bool {
    let n = word.len();
    for r in 1..n {
        for i in 0..n {
            match word[(r + i) % n].cmp(&word[i]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => break,
                std::cmp::Ordering::Equal => {
                    if i == n - 1 {
                        return false; // a proper period: not primitive
                    }
                }
            }
        }
    }
    true
}

/// Keep exactly one of {class, inverse class}: the one whose Lyndon word is
/// smaller. (No free-group element is conjugate to its own inverse, so the
/// comparison never ties.)
fn survives_inversion_dedupe(word: &[u8]) -> bool {
    let n = word.len();
    let inverse: Vec<u8> = word.iter().rev().map(|&c| inv_code(c)).collect();
    let mut best = inverse.clone();
    let mut rotated = vec![0u8; n];
    for r in 1..n {
        for i in 0..n {
            rotated[i] = inverse[(r + i) % n];
        }
        if rotated < best {
            best.copy_from_slice(&rotated);
        }
    }
    debug_assert_ne!(word, best.as_slice(), "free-group class equal to its inverse");
    word < best.as_slice()
}

fn integral_on_axis(
    root: &[u8],
    matrix: &Mat2,
    primitive_length: f64,
    power: u32,
    total_length: f64,
    f: &Potential,
) -> Result<f64> {
    match f {
        Potential::Constant(c) => Ok(c * total_length),
        Potential::CylinderWeights { depth, weights } => {
            let n = root.len();
            let mut sum = 0.0;
            let mut window = Vec::with_capacity(*depth);
            for i in 0..n {
                window.clear();
                for k in 0..*depth {
                    window.push(root[(i + k) % n]);
                }
                if let Some(&w) = weights.get(&window) {
                    sum += w;
                }
            }
            Ok(total_length / n as f64 * sum)
        }
        Potential::Sampled { callback, quadrature_step } => {
            let axis = GeodesicAxis::from_matrix(matrix)?;
            let step = quadrature_step
                .unwrap_or_else(|| (primitive_length / 1024.0).min(1e-2));
            let one_period = axis.integrate_sampled(primitive_length, step, &**callback);
            Ok(power as f64 * one_period)
        }
    }
}

fn sort_classes(classes: &mut [ClosedOrbit]) {
    classes.sort_by(|a, b| {
        a.length()
            .partial_cmp(&b.length())
            .expect("geodesic lengths are finite")
            .then_with(|| class_codes(a).cmp(&class_codes(b)))
    });
}

fn class_codes(orbit: &ClosedOrbit) -> Vec<u8> {
    match orbit.class() {
        OrbitClass::Free(class) => class.canonical().letters().iter().map(|l| l.code()).collect(),
        OrbitClass::Necklace(_) => unreachable!("schottky search emits free classes"),
    }
}
