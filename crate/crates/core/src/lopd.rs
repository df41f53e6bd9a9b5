//! Leading-one position detection over a layer's spike bit vector.

/// One bit per neuron; bit `i` set means neuron `i` spiked.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeVector {
    width: usize,
    words: Vec<u64>,
}

impl SpikeVector {
    pub fn zeros(width: usize) -> Self {
        SpikeVector {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    /// Vector of `width` bits from little-endian 64-bit words; bits past
    /// `width` are dropped.
    pub fn from_words(width: usize, words: &[u64]) -> Self {
        let mut v = Self::zeros(width);
        for (dst, src) in v.words.iter_mut().zip(words) {
            *dst = *src;
        }
        v.mask_tail();
        v
    }

    pub fn from_positions(width: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(width);
        for p in positions {
            v.set(p);
        }
        v
    }

    fn mask_tail(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        assert!(i < self.width, "bit {i} out of width {}", self.width);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bitwise AND of two vectors of the same width.
    pub fn and(&self, other: &SpikeVector) -> SpikeVector {
        assert_eq!(self.width, other.width);
        SpikeVector {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }
}

/// Position and one-hot mask of the most significant set bit.
pub fn leading_one(v: &SpikeVector) -> Option<(usize, SpikeVector)> {
    let (w, word) = v
        .words
        .iter()
        .enumerate()
        .rev()
        .find(|(_, &word)| word != 0)?;
    let pos = w * 64 + 63 - word.leading_zeros() as usize;
    let mut one_hot = SpikeVector::zeros(v.width);
    one_hot.set(pos);
    Some((pos, one_hot))
}

/// Set-bit positions in descending order, found by repeated leading-one
/// detection with the detected bit cleared each round.
pub fn drain(v: &SpikeVector) -> Vec<usize> {
    let mut work = v.clone();
    let mut out = Vec::with_capacity(v.count_ones());
    while let Some((pos, _)) = leading_one(&work) {
        work.clear(pos);
        out.push(pos);
    }
    out
}

/// Clocks spent draining `v`: one per detected bit plus one to see zero.
pub fn drain_cycles(v: &SpikeVector) -> u64 {
    v.count_ones() as u64 + 1
}
