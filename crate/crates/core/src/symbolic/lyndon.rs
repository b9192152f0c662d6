//! Generation of aperiodic necklace representatives (Lyndon words).
//!
//! The iterator below is the classic amortized-constant successor loop: emit
//! the current word, extend it periodically to the length cap, strip trailing
//! maximal letters, increment the last letter. Restricting to a fixed first
//! letter keeps the lexicographic order intact while making the generation
//! embarrassingly parallel across first letters.

/// Iterator over Lyndon words of length `<= max_len` over `0..alphabet`,
/// in lexicographic order, optionally restricted to one first letter.
pub struct LyndonWords {
    state: Option<Vec<u8>>,
    alphabet: u8,
    max_len: usize,
    first: Option<u8>,
}

impl LyndonWords {
    pub fn all(alphabet: u8, max_len: usize) -> Self {
        assert!(alphabet >= 1 && max_len >= 1);
        LyndonWords { state: Some(vec![0]), alphabet, max_len, first: None }
    }

    /// Only the words starting with `first` (every Lyndon word starts with
    /// its minimal letter, so these blocks partition the full list).
    pub fn starting_with(alphabet: u8, max_len: usize, first: u8) -> Self {
        assert!(first < alphabet && max_len >= 1);
        LyndonWords { state: Some(vec![first]), alphabet, max_len, first: Some(first) }
    }
}

impl Iterator for LyndonWords {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let mut w = self.state.take()?;
        let emit = w.clone();
        // Successor: periodic extension, then strip-and-increment.
        let period = w.len();
        while w.len() < self.max_len {
            w.push(w[w.len() - period]);
        }
        while let Some(&last) = w.last() {
            if last == self.alphabet - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
            let exhausted_block = match self.first {
                Some(first) => w.len() == 1 && w[0] != first,
                None => false,
            };
            if !exhausted_block {
                self.state = Some(w);
            }
        }
        Some(emit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_lyndon(w: &[u8]) -> bool {
        // Strictly smaller than all proper rotations.
        (1..w.len()).all(|r| {
            let rot: Vec<u8> = (0..w.len()).map(|i| w[(i + r) % w.len()]).collect();
            *w < rot[..]
        })
    }

    #[test]
    fn binary_words_up_to_length_six() {
        let words: Vec<Vec<u8>> = LyndonWords::all(2, 6).collect();
        // Counts by length: 2, 1, 2, 3, 6, 9.
        let mut by_len = [0usize; 7];
        for w in &words {
            assert!(is_lyndon(w), "{w:?} is not a Lyndon word");
            by_len[w.len()] += 1;
        }
        assert_eq!(&by_len[1..], &[2, 1, 2, 3, 6, 9]);
        assert_eq!(words.len(), 23);
        // Lexicographic emission order.
        for pair in words.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn first_letter_blocks_partition_the_list() {
        let all: Vec<Vec<u8>> = LyndonWords::all(3, 5).collect();
        let mut blocks: Vec<Vec<u8>> = Vec::new();
        for s in 0..3 {
            blocks.extend(LyndonWords::starting_with(3, 5, s));
        }
        assert_eq!(all, blocks);
    }

    #[test]
    fn exhaustive_against_definition() {
        // Every Lyndon word over 3 letters of length <= 4, by brute force.
        let mut expected = Vec::new();
        for len in 1..=4usize {
            let mut digits = vec![0u8; len];
            loop {
                if is_lyndon(&digits) {
                    expected.push(digits.clone());
                }
                let mut pos = len;
                let mut done = false;
                loop {
                    if pos == 0 {
                        done = true;
                        break;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < 3 {
                        break;
                    }
                    digits[pos] = 0;
                }
                if done {
                    break;
                }
            }
        }
        expected.sort();
        let mut got: Vec<Vec<u8>> = LyndonWords::all(3, 4).collect();
        got.sort();
        assert_eq!(got, expected);
    }
}
