//! Words in a finitely generated free group and their conjugacy classes.
//!
//! Conjugacy classes of hyperbolic isometries are what periodic orbits are
//! indexed by, so everything downstream leans on the canonical form computed
//! here: cyclically reduce, then take the least rotation (and, when
//! orientation is collapsed, the least rotation of the inverse word as well).

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// One signed generator. Ordering is (generator index, then sign) with the
/// positive generator before its inverse, so `a < a^-1 < b < b^-1 < ...`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter {
    pub gen: u16,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: u16, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    pub fn inverted(self) -> Self {
        Letter { gen: self.gen, inverse: !self.inverse }
    }

    /// Compact code used as a cylinder key and as the enumeration alphabet:
    /// `2*gen + inverse`, which sorts identically to the letter order.
    pub fn code(self) -> u8 {
        (2 * self.gen + u16::from(self.inverse)) as u8
    }

    pub fn from_code(code: u8) -> Self {
        Letter { gen: u16::from(code) / 2, inverse: code % 2 == 1 }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gen < 26 {
            let base = if self.inverse { b'A' } else { b'a' };
            write!(f, "{}", (base + self.gen as u8) as char)
        } else {
            // Fall back to an explicit form for absurdly large ranks.
            write!(f, "g{}{}", self.gen, if self.inverse { "'" } else { "" })
        }
    }
}

/// A freely reduced word in the generators. The reduction invariant is
/// enforced at construction; an empty word is the identity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GeneratorWord {
    letters: Vec<Letter>,
}

impl GeneratorWord {
    /// Wrap a letter sequence, rejecting anything not freely reduced.
    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        for pair in letters.windows(2) {
            if pair[1] == pair[0].inverted() {
                return Err(Error::InvalidArgument(format!(
                    "word is not freely reduced at '{}{}'",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(GeneratorWord { letters })
    }

    /// Freely reduce an arbitrary letter sequence (stack cancellation).
    pub fn reduced(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut stack: Vec<Letter> = Vec::new();
        for l in letters {
            if stack.last() == Some(&l.inverted()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        GeneratorWord { letters: stack }
    }

    pub fn identity() -> Self {
        GeneratorWord { letters: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// The group inverse: reverse the word and invert each letter. Free
    /// reduction is preserved, so no revalidation is needed.
    pub fn inverse(&self) -> Self {
        GeneratorWord {
            letters: self.letters.iter().rev().map(|l| l.inverted()).collect(),
        }
    }

    /// Concatenate-and-reduce (the group product).
    pub fn mul(&self, rhs: &GeneratorWord) -> Self {
        GeneratorWord::reduced(self.letters.iter().chain(rhs.letters.iter()).copied())
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for GeneratorWord {
    type Err = Error;

    /// Parse compact notation: lowercase = generator, uppercase = inverse
    /// (`"abA"` means a b a^-1). `"e"` or the empty string is the identity.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s == "e" {
            return Ok(GeneratorWord::identity());
        }
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let l = match ch {
                'a'..='z' => Letter::new(ch as u16 - 'a' as u16, false),
                'A'..='Z' => Letter::new(ch as u16 - 'A' as u16, true),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unexpected character '{ch}' in word"
                    )))
                }
            };
            letters.push(l);
        }
        GeneratorWord::from_letters(letters)
    }
}

/// A conjugacy class with its canonical cyclically reduced representative.
///
/// `canonical` is the least rotation of the cyclic reduction (least over the
/// inverse word's rotations as well when `orientation_collapsed`), and
/// `primitive_root`/`power` factor it as `root^power` with an aperiodic root.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ConjugacyClass {
    canonical: GeneratorWord,
    primitive_root: GeneratorWord,
    power: u32,
    orientation_collapsed: bool,
}

impl ConjugacyClass {
    pub fn canonical(&self) -> &GeneratorWord {
        &self.canonical
    }

    pub fn primitive_root(&self) -> &GeneratorWord {
        &self.primitive_root
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn is_primitive(&self) -> bool {
        self.power == 1
    }

    pub fn orientation_collapsed(&self) -> bool {
        self.orientation_collapsed
    }

    /// Word length of the canonical representative.
    pub fn word_len(&self) -> usize {
        self.canonical.len()
    }
}

impl fmt::Display for ConjugacyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical)
    }
}

/// Strip conjugation padding: while the first letter inverts the last one,
/// drop both. A freely reduced non-identity word stays non-empty.
fn cyclic_reduce(mut letters: Vec<Letter>) -> Vec<Letter> {
    while letters.len() >= 2 && *letters.last().unwrap() == letters[0].inverted() {
        letters.pop();
        letters.remove(0);
    }
    letters
}

/// Least rotation of a letter sequence under the letter order. Plain
/// quadratic scan; words at this scale are tens of letters, not thousands.
fn least_rotation(letters: &[Letter]) -> Vec<Letter> {
    let n = letters.len();
    let mut best: Option<Vec<Letter>> = None;
    for start in 0..n {
        let rot: Vec<Letter> = (0..n).map(|i| letters[(start + i) % n]).collect();
        if best.as_ref().is_none_or(|b| rot < *b) {
            best = Some(rot);
        }
    }
    best.unwrap_or_default()
}

/// Smallest period `p` of `letters` (p divides the length and the word is the
/// first `p` letters repeated).
fn smallest_period(letters: &[Letter]) -> usize {
    let n = letters.len();
    'outer: for p in 1..=n {
        if !n.is_multiple_of(p) {
            continue;
        }
        for i in p..n {
            if letters[i] != letters[i - p] {
                continue 'outer;
            }
        }
        return p;
    }
    n
}

/// Canonical conjugacy-class form of a freely reduced word.
///
/// With `collapse_orientation` the class of the inverse word is identified
/// with the class of the word itself (unoriented closed geodesics); the
/// canonical form is then the least rotation over both words. The identity
/// word is rejected: it labels no closed geodesic.
pub fn canonicalize(word: &GeneratorWord, collapse_orientation: bool) -> Result<ConjugacyClass> {
    if word.is_identity() {
        return Err(Error::IdentityWord);
    }
    let cyc = cyclic_reduce(word.letters().to_vec());
    debug_assert!(!cyc.is_empty(), "cyclic reduction emptied a non-identity word");
    let mut canonical = least_rotation(&cyc);
    if collapse_orientation {
        let inv: Vec<Letter> = cyc.iter().rev().map(|l| l.inverted()).collect();
        let alt = least_rotation(&inv);
        if alt < canonical {
            canonical = alt;
        }
    }
    let p = smallest_period(&canonical);
    let power = (canonical.len() / p) as u32;
    let root = canonical[..p].to_vec();
    Ok(ConjugacyClass {
        canonical: GeneratorWord::from_letters(canonical)?,
        primitive_root: GeneratorWord::from_letters(root)?,
        power,
        orientation_collapsed: collapse_orientation,
    })
}

/// Count distinct conjugacy classes among cyclically reduced words of length
/// exactly `word_len` in the free group on `rank` generators.
///
/// Deliberate brute force over all `(2 rank)^word_len` strings -- this is the
/// independent cross-check the fast enumerators are measured against, so it
/// shares no machinery with them beyond `canonicalize`.
pub fn class_count(rank: u16, word_len: usize, collapse_orientation: bool) -> u64 {
    assert!(rank >= 1, "rank must be at least 1");
    assert!(word_len >= 1, "word length must be at least 1");
    let alphabet = 2 * rank as usize;
    let mut seen = std::collections::HashSet::new();
    let mut digits = vec![0usize; word_len];
    loop {
        let letters: Vec<Letter> = digits.iter().map(|&d| Letter::from_code(d as u8)).collect();
        if is_cyclically_reduced(&letters) {
            let word = GeneratorWord::from_letters(letters).expect("reduced by construction");
            let class = canonicalize(&word, collapse_orientation).expect("non-identity");
            seen.insert(class.canonical().clone());
        }
        // Odometer increment over the alphabet.
        let mut pos = word_len;
        loop {
            if pos == 0 {
                return seen.len() as u64;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < alphabet {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Freely reduced and no inverse pair across the wrap-around.
pub fn is_cyclically_reduced(letters: &[Letter]) -> bool {
    if letters.is_empty() {
        return false;
    }
    for pair in letters.windows(2) {
        if pair[1] == pair[0].inverted() {
            return false;
        }
    }
    letters.len() == 1 || *letters.last().unwrap() != letters[0].inverted()
}

/// Number of cyclically reduced words of length `n` over `2*rank` letters,
/// counted by direct string scan. Used to pin the closed-form count in tests.
pub fn cyclically_reduced_word_count(rank: u16, word_len: usize) -> u64 {
    assert!(rank >= 1 && word_len >= 1);
    let alphabet = 2 * rank as usize;
    let mut digits = vec![0usize; word_len];
    let mut count = 0u64;
    loop {
        let letters: Vec<Letter> = digits.iter().map(|&d| Letter::from_code(d as u8)).collect();
        if is_cyclically_reduced(&letters) {
            count += 1;
        }
        let mut pos = word_len;
        loop {
            if pos == 0 {
                return count;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < alphabet {
                break;
            }
            digits[pos] = 0;
        }
    }
}
