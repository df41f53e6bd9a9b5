//! Domain types shared by every stage: delta-time spikes, spike trains,
//! weight matrices and the network configuration.

use crate::error::Error;
use crate::fixed::{FixedPoint, Format};

/// Largest representable gap between consecutive spikes of one stream.
/// Wider gaps saturate here instead of wrapping.
pub const MAX_DELTA: u16 = u16::MAX;

/// One serialized spike: time since the previous spike of the same stream
/// (the first spike is measured from time 0) and the emitting synapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeltaSpike {
    pub delta_time: u16,
    pub synapse_index: u32,
}

impl DeltaSpike {
    pub fn new(delta_time: u16, synapse_index: u32) -> Self {
        DeltaSpike {
            delta_time,
            synapse_index,
        }
    }

    /// Build from an arbitrary gap, saturating at [`MAX_DELTA`].
    pub fn from_gap(gap: u64, synapse_index: u32) -> Self {
        DeltaSpike {
            delta_time: gap.min(MAX_DELTA as u64) as u16,
            synapse_index,
        }
    }
}

/// An ordered, delta-encoded spike stream.
///
/// Absolute times are the prefix sums of `delta_time` and are therefore
/// non-decreasing by construction. Streams produced by the sorter also keep
/// equal-time spikes in ascending synapse order (see [`SpikeTrain::is_canonical`]);
/// streams serialized by the LOPD list equal-time spikes highest index first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SpikeTrain {
    spikes: Vec<DeltaSpike>,
}

impl SpikeTrain {
    pub fn new(spikes: Vec<DeltaSpike>) -> Self {
        SpikeTrain { spikes }
    }

    /// Delta-encode `(absolute_time, synapse_index)` pairs.
    ///
    /// Gaps wider than [`MAX_DELTA`] saturate. Fails when times decrease.
    pub fn from_absolute<I>(events: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (u64, u32)>,
    {
        let mut prev = 0u64;
        let mut spikes = Vec::new();
        for (position, (t, idx)) in events.into_iter().enumerate() {
            if t < prev {
                return Err(Error::Shape(format!(
                    "spike {position} at time {t} precedes previous time {prev}"
                )));
            }
            spikes.push(DeltaSpike::from_gap(t - prev, idx));
            prev = t;
        }
        Ok(SpikeTrain { spikes })
    }

    /// Single-synapse stream from sorted absolute times.
    pub fn from_times(synapse_index: u32, times: &[u64]) -> Result<Self, Error> {
        Self::from_absolute(times.iter().map(|&t| (t, synapse_index)))
    }

    /// Prefix-sum decode to `(absolute_time, synapse_index)`.
    pub fn absolute(&self) -> Vec<(u64, u32)> {
        let mut t = 0u64;
        self.spikes
            .iter()
            .map(|s| {
                t += s.delta_time as u64;
                (t, s.synapse_index)
            })
            .collect()
    }

    /// Absolute time of the last spike, or 0 for an empty train.
    pub fn end_time(&self) -> u64 {
        self.spikes.iter().map(|s| s.delta_time as u64).sum()
    }

    /// True when equal-time spikes appear in non-descending synapse order.
    pub fn is_canonical(&self) -> bool {
        self.spikes
            .windows(2)
            .all(|w| w[1].delta_time > 0 || w[1].synapse_index >= w[0].synapse_index)
    }

    pub fn spikes(&self) -> &[DeltaSpike] {
        &self.spikes
    }

    pub fn push(&mut self, spike: DeltaSpike) {
        self.spikes.push(spike);
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DeltaSpike> {
        self.spikes.iter()
    }
}

impl FromIterator<DeltaSpike> for SpikeTrain {
    fn from_iter<T: IntoIterator<Item = DeltaSpike>>(iter: T) -> Self {
        SpikeTrain {
            spikes: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a SpikeTrain {
    type Item = &'a DeltaSpike;
    type IntoIter = std::slice::Iter<'a, DeltaSpike>;

    fn into_iter(self) -> Self::IntoIter {
        self.spikes.iter()
    }
}

/// Storage class of a weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    /// Arbitrary signed fixed-point weights.
    Fixed,
    /// Weights in {−1, 0, 1} (times 2^−frac_bits).
    Ternary,
    /// Weights 0 or ±2^i (times 2^−frac_bits).
    Pow2,
}

impl WeightKind {
    pub fn code(self) -> u8 {
        match self {
            WeightKind::Fixed => 0,
            WeightKind::Ternary => 1,
            WeightKind::Pow2 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(WeightKind::Fixed),
            1 => Some(WeightKind::Ternary),
            2 => Some(WeightKind::Pow2),
            _ => None,
        }
    }

    /// Whether `raw` is a legal stored value for this kind at `weight_bits`.
    pub fn admits(self, raw: i32, weight_bits: u8) -> bool {
        let lo = -(1i32 << (weight_bits - 1));
        let hi = (1i32 << (weight_bits - 1)) - 1;
        match self {
            WeightKind::Fixed => raw >= lo && raw <= hi,
            WeightKind::Ternary => (-1..=1).contains(&raw),
            WeightKind::Pow2 => {
                let m = raw.unsigned_abs();
                raw == 0 || (m.is_power_of_two() && m <= hi as u32)
            }
        }
    }
}

/// Per-layer weight store, synapse-major: row `r` holds every outgoing weight
/// of input synapse `r`, so one row read feeds all neuron cores at once.
///
/// Real value of a stored weight is `raw · 2^−frac_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    in_count: usize,
    out_count: usize,
    kind: WeightKind,
    weight_bits: u8,
    frac_bits: u8,
    data: Vec<i16>,
}

impl WeightMatrix {
    pub fn new(
        in_count: usize,
        out_count: usize,
        kind: WeightKind,
        weight_bits: u8,
        frac_bits: u8,
        data: Vec<i16>,
    ) -> Result<Self, Error> {
        if weight_bits != 8 && weight_bits != 16 {
            return Err(Error::WeightBits(weight_bits));
        }
        if frac_bits >= weight_bits {
            return Err(Error::InvalidFormat {
                frac_bits,
                total_bits: weight_bits,
            });
        }
        if data.len() != in_count * out_count {
            return Err(Error::WeightShape {
                rows: in_count,
                cols: out_count,
                expected: in_count * out_count,
                actual: data.len(),
            });
        }
        if let Some(pos) = data
            .iter()
            .position(|&w| !kind.admits(w as i32, weight_bits))
        {
            return Err(Error::IllegalWeight {
                kind,
                row: pos / out_count.max(1),
                col: pos % out_count.max(1),
                value: data[pos] as i32,
            });
        }
        Ok(WeightMatrix {
            in_count,
            out_count,
            kind,
            weight_bits,
            frac_bits,
            data,
        })
    }

    /// Ternary matrix with unit weights (frac_bits 0).
    pub fn ternary(in_count: usize, out_count: usize, data: Vec<i8>) -> Result<Self, Error> {
        Self::new(
            in_count,
            out_count,
            WeightKind::Ternary,
            8,
            0,
            data.into_iter().map(i16::from).collect(),
        )
    }

    pub fn zeros(in_count: usize, out_count: usize, kind: WeightKind, frac_bits: u8) -> Self {
        WeightMatrix {
            in_count,
            out_count,
            kind,
            weight_bits: 8,
            frac_bits,
            data: vec![0; in_count * out_count],
        }
    }

    pub fn in_count(&self) -> usize {
        self.in_count
    }

    pub fn out_count(&self) -> usize {
        self.out_count
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn weight_bits(&self) -> u8 {
        self.weight_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// All outgoing weights of input synapse `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[i16] {
        &self.data[r * self.out_count..(r + 1) * self.out_count]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i16 {
        self.data[row * self.out_count + col]
    }

    pub fn data(&self) -> &[i16] {
        &self.data
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.get(row, col) as f64 / (1u64 << self.frac_bits) as f64
    }

    /// Every weight widened to `potential`'s fraction bits (sign-extended,
    /// left-shifted, or floor-shifted when the weight is finer).
    pub fn aligned_to(&self, potential: Format) -> Vec<i64> {
        self.data
            .iter()
            .map(|&w| potential.align_raw(w as i64, self.frac_bits))
            .collect()
    }
}

/// Network shape and arithmetic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub image_side: usize,
    pub patch_size: usize,
    /// `[Y, hidden..., classes]`; `Y` is the encoder neuron count.
    pub layer_sizes: Vec<usize>,
    pub theta: FixedPoint,
    pub potential: Format,
    pub delta_time_bits: u8,
}

/// Encoder neuron count for a stride-1 `patch` × `patch` window over a
/// `side` × `side` image.
pub fn patch_count(side: usize, patch: usize) -> usize {
    let per_axis = side + 1 - patch;
    per_axis * per_axis
}

impl NetworkConfig {
    /// Hidden and output widths used for MNIST.
    pub const MNIST_TAIL: [usize; 4] = [800, 512, 256, 10];

    pub fn new(image_side: usize, patch_size: usize, tail: &[usize]) -> Result<Self, Error> {
        if patch_size == 0 || patch_size > image_side {
            return Err(Error::PatchSize {
                patch: patch_size,
                side: image_side,
            });
        }
        let potential = Format::POTENTIAL;
        let mut layer_sizes = vec![patch_count(image_side, patch_size)];
        layer_sizes.extend_from_slice(tail);
        let cfg = NetworkConfig {
            image_side,
            patch_size,
            layer_sizes,
            theta: FixedPoint::one(potential)?,
            potential,
            delta_time_bits: 16,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The Y-800-512-256-10 network on 28×28 images.
    pub fn mnist(patch_size: usize) -> Result<Self, Error> {
        Self::new(28, patch_size, &Self::MNIST_TAIL)
    }

    pub fn encoder_neurons(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.patch_size == 0 || self.patch_size > self.image_side {
            return Err(Error::PatchSize {
                patch: self.patch_size,
                side: self.image_side,
            });
        }
        let y = patch_count(self.image_side, self.patch_size);
        if self.layer_sizes.first() != Some(&y) {
            return Err(Error::Shape(format!(
                "layer_sizes[0] = {:?}, expected Y = ({} - {} + 1)^2 = {}",
                self.layer_sizes.first(),
                self.image_side,
                self.patch_size,
                y
            )));
        }
        if self.theta.format() != self.potential
            || self.theta.raw() as i64 != self.potential.one_raw()
        {
            return Err(Error::Threshold {
                raw: self.theta.raw(),
                format: self.potential,
            });
        }
        Ok(())
    }
}
