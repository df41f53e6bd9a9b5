//! Learned patch-wise input encoding.
//!
//! Every stride-1 `p`×`p` window of the image belongs to one first-layer LIF
//! neuron. The window's pixels are presented to that neuron one per time
//! step in row-major order, each scaled by a learned weight restricted to
//! {−1, 0, 1} or to signed powers of two, so the scaling is a negation or a
//! shift. Between presentations the neuron decays by one shift.

use crate::error::Error;
use crate::fixed::{FixedPoint, Format};
use crate::model::{patch_count, SpikeTrain, WeightKind, WeightMatrix};
use crate::neuron_core::NeuronState;

/// A square grayscale image with pixels normalized to [0, 1] in a
/// fixed-point format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    side: usize,
    format: Format,
    pixels: Vec<i32>,
}

impl Image {
    /// Normalize 8-bit intensities: `pixel / 255`, rounded half-to-even.
    pub fn from_u8(side: usize, bytes: &[u8], format: Format) -> Result<Self, Error> {
        if bytes.len() != side * side {
            return Err(Error::Shape(format!(
                "image of side {side} needs {} pixels, got {}",
                side * side,
                bytes.len()
            )));
        }
        let pixels = bytes
            .iter()
            .map(|&b| FixedPoint::from_real_in(b as f64 / 255.0, format).map(FixedPoint::raw))
            .collect::<Result<_, _>>()?;
        Ok(Image {
            side,
            format,
            pixels,
        })
    }

    /// Pixels given directly as raw fixed-point values in [0, 1].
    pub fn from_raw(side: usize, pixels: Vec<i32>, format: Format) -> Result<Self, Error> {
        if pixels.len() != side * side {
            return Err(Error::Shape(format!(
                "image of side {side} needs {} pixels, got {}",
                side * side,
                pixels.len()
            )));
        }
        if let Some(&bad) = pixels
            .iter()
            .find(|&&p| p < 0 || p as i64 > format.one_raw())
        {
            return Err(Error::Overflow {
                value: bad as f64 / format.one_raw() as f64,
                format,
            });
        }
        Ok(Image {
            side,
            format,
            pixels,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn pixels(&self) -> &[i32] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> i32 {
        self.pixels[row * self.side + col]
    }
}

/// Encoder weights and patch geometry.
#[derive(Debug, Clone)]
pub struct EncoderConfig {
    patch: usize,
    side: usize,
    /// Shape `(p², Y)`: column `j` holds neuron `j`'s per-position weights.
    weights: WeightMatrix,
}

impl EncoderConfig {
    pub fn new(side: usize, patch: usize, weights: WeightMatrix) -> Result<Self, Error> {
        if patch == 0 || patch > side {
            return Err(Error::PatchSize { patch, side });
        }
        if weights.kind() == WeightKind::Fixed {
            return Err(Error::Shape(
                "encoder weights must be TERNARY or POW2, got FIXED".into(),
            ));
        }
        let y = patch_count(side, patch);
        if weights.in_count() != patch * patch || weights.out_count() != y {
            return Err(Error::Shape(format!(
                "patch {patch} on side {side} needs encoder weights {}x{}, got {}x{}",
                patch * patch,
                y,
                weights.in_count(),
                weights.out_count()
            )));
        }
        Ok(EncoderConfig {
            patch,
            side,
            weights,
        })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn neurons(&self) -> usize {
        self.weights.out_count()
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }
}

/// The operation used to scale one pixel; there is no general multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScaleOp {
    Zero,
    Pass,
    Negate,
    ShiftLeft(u32),
    ShiftRight(u32),
    NegateShiftLeft(u32),
    NegateShiftRight(u32),
}

/// Histogram of scaling operations performed by [`encode_image_audited`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpAudit {
    pub zero: u64,
    pub pass: u64,
    pub negate: u64,
    pub shift: u64,
}

impl OpAudit {
    fn record(&mut self, op: ScaleOp) {
        match op {
            ScaleOp::Zero => self.zero += 1,
            ScaleOp::Pass => self.pass += 1,
            ScaleOp::Negate => self.negate += 1,
            _ => self.shift += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.zero + self.pass + self.negate + self.shift
    }
}

/// Scale a pixel by the stored weight `raw · 2^−weight_frac`.
///
/// The exponent is clamped to `[−frac_bits, total_bits − frac_bits − 2]` of
/// the potential format. Negative weights negate first and then shift, so a
/// right shift floors the exact signed product.
pub fn scale_pixel(raw: i16, weight_frac: u8, pixel: i32, potential: Format) -> (i64, ScaleOp) {
    if raw == 0 {
        return (0, ScaleOp::Zero);
    }
    let pf = potential.frac_bits() as i32;
    let lo = -pf;
    let hi = potential.total_bits() as i32 - pf - 2;
    let exp = (raw.unsigned_abs().trailing_zeros() as i32 - weight_frac as i32).clamp(lo, hi);
    let neg = raw < 0;
    let signed = if neg { -(pixel as i64) } else { pixel as i64 };
    match (neg, exp) {
        (false, 0) => (signed, ScaleOp::Pass),
        (true, 0) => (signed, ScaleOp::Negate),
        (false, e) if e > 0 => (signed << e, ScaleOp::ShiftLeft(e as u32)),
        (true, e) if e > 0 => (signed << e, ScaleOp::NegateShiftLeft(e as u32)),
        (false, e) => (signed >> -e, ScaleOp::ShiftRight((-e) as u32)),
        (true, e) => (signed >> -e, ScaleOp::NegateShiftRight((-e) as u32)),
    }
}

/// All stride-1 `p`×`p` windows, row-major over top-left corners, each
/// listing its pixels row-major.
pub fn extract_patches(img: &Image, p: usize) -> Result<Vec<Vec<i32>>, Error> {
    let side = img.side();
    if p == 0 || p > side {
        return Err(Error::PatchSize { patch: p, side });
    }
    let n = side - p + 1;
    let mut patches = Vec::with_capacity(n * n);
    for top in 0..n {
        for left in 0..n {
            let mut patch = Vec::with_capacity(p * p);
            for r in top..top + p {
                patch.extend_from_slice(&img.pixels[r * side + left..r * side + left + p]);
            }
            patches.push(patch);
        }
    }
    Ok(patches)
}

/// Encode `img` into one spike train per encoder neuron.
pub fn encode_image(img: &Image, cfg: &EncoderConfig) -> Result<Vec<SpikeTrain>, Error> {
    encode_image_audited(img, cfg).map(|(trains, _)| trains)
}

/// [`encode_image`] that also reports which scaling operations were used.
pub fn encode_image_audited(
    img: &Image,
    cfg: &EncoderConfig,
) -> Result<(Vec<SpikeTrain>, OpAudit), Error> {
    if img.side() != cfg.side {
        return Err(Error::Shape(format!(
            "encoder expects {0}x{0} images, got {1}x{1}",
            cfg.side,
            img.side()
        )));
    }
    let format = img.format();
    let theta = FixedPoint::one(format)?;
    let patches = extract_patches(img, cfg.patch)?;
    let w = &cfg.weights;
    let wf = w.frac_bits();
    let mut audit = OpAudit::default();
    let mut trains = Vec::with_capacity(patches.len());
    for (j, patch) in patches.iter().enumerate() {
        let mut neuron = NeuronState::new(theta);
        let mut times = Vec::new();
        for (t, &pixel) in patch.iter().enumerate() {
            if t > 0 {
                neuron.decay(1);
            }
            let (current, op) = scale_pixel(w.get(t, j), wf, pixel, format);
            audit.record(op);
            neuron.accumulate_raw(current);
            for _ in 0..neuron.threshold() {
                times.push(t as u64);
            }
        }
        trains.push(SpikeTrain::from_times(j as u32, &times)?);
    }
    Ok((trains, audit))
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: Format = Format::POTENTIAL;

    fn flat(side: usize, value: i32) -> Image {
        Image::from_raw(side, vec![value; side * side], F).unwrap()
    }

    #[test]
    fn patch_counts() {
        let img = flat(28, 0);
        assert_eq!(extract_patches(&img, 9).unwrap().len(), 400);
        let p5 = extract_patches(&img, 5).unwrap();
        assert_eq!(p5.len(), 576);
        assert!(p5.iter().all(|p| p.len() == 25));
        let whole = extract_patches(&img, 28).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole[0].len(), 784);
        assert!(matches!(
            extract_patches(&img, 29),
            Err(Error::PatchSize { .. })
        ));
    }

    #[test]
    fn patches_are_row_major() {
        // 4 fraction bits so raw 0..=15 stay within [0, 1]
        let fmt = Format::new(4, 16).unwrap();
        let img = Image::from_raw(4, (0..16).collect(), fmt).unwrap();
        let patches = extract_patches(&img, 3).unwrap();
        assert_eq!(patches[0], vec![0, 1, 2, 4, 5, 6, 8, 9, 10]);
        assert_eq!(patches[1], vec![1, 2, 3, 5, 6, 7, 9, 10, 11]);
        assert_eq!(patches[2], vec![4, 5, 6, 8, 9, 10, 12, 13, 14]);
    }

    #[test]
    fn pixel_occurrence_closed_form() {
        let side = 28;
        for p in 5..=9 {
            let n = side - p + 1;
            let mut counts = vec![0usize; side * side];
            for top in 0..n {
                for left in 0..n {
                    for r in top..top + p {
                        for c in left..left + p {
                            counts[r * side + c] += 1;
                        }
                    }
                }
            }
            assert_eq!(counts[0], 1);
            assert_eq!(counts[side * side - 1], 1);
            let mid = side / 2;
            assert_eq!(counts[mid * side + mid], p.min(n).pow(2));
        }
    }

    #[test]
    fn normalization() {
        let img = Image::from_u8(2, &[0, 255, 128, 1], F).unwrap();
        // 128/255*256 = 128.50..., 1/255*256 = 1.004
        assert_eq!(img.pixels(), &[0, 256, 129, 1]);
    }

    fn single(p: usize, weights: Vec<i8>) -> EncoderConfig {
        EncoderConfig::new(p, p, WeightMatrix::ternary(p * p, 1, weights).unwrap()).unwrap()
    }

    #[test]
    fn zero_image_is_silent() {
        let cfg = EncoderConfig::new(
            28,
            9,
            WeightMatrix::ternary(81, 400, vec![1; 81 * 400]).unwrap(),
        )
        .unwrap();
        let trains = encode_image(&flat(28, 0), &cfg).unwrap();
        assert_eq!(trains.len(), 400);
        assert!(trains.iter().all(SpikeTrain::is_empty));
    }

    #[test]
    fn bright_patch_spikes_every_step() {
        // P = 1.0 at t=0 -> spike, residue 0; next step 0/2 + 1.0 -> spike ...
        let cfg = single(3, vec![1; 9]);
        let trains = encode_image(&flat(3, 256), &cfg).unwrap();
        let times: Vec<u64> = trains[0].absolute().iter().map(|a| a.0).collect();
        assert_eq!(times, (0..9).collect::<Vec<u64>>());
    }

    #[test]
    fn negative_weight_never_spikes() {
        let mut w = vec![0i8; 9];
        w[4] = -1;
        let cfg = single(3, w);
        let (trains, audit) = encode_image_audited(&flat(3, 256), &cfg).unwrap();
        assert!(trains[0].is_empty());
        assert_eq!(audit.negate, 1);
        assert_eq!(audit.zero, 8);
    }

    #[test]
    fn fixed_encoder_weights_rejected() {
        let w = WeightMatrix::zeros(9, 1, WeightKind::Fixed, 0);
        assert!(EncoderConfig::new(3, 3, w).is_err());
        let w = WeightMatrix::zeros(9, 2, WeightKind::Ternary, 0);
        assert!(EncoderConfig::new(3, 3, w).is_err());
    }

    #[test]
    fn pow2_scaling() {
        // weight 2^1 with frac 2 -> 0.5
        assert_eq!(scale_pixel(2, 2, 256, F), (128, ScaleOp::ShiftRight(1)));
        assert_eq!(scale_pixel(-2, 2, 3, F), (-2, ScaleOp::NegateShiftRight(1)));
        assert_eq!(scale_pixel(4, 0, 100, F), (400, ScaleOp::ShiftLeft(2)));
        assert_eq!(scale_pixel(-1, 0, 100, F), (-100, ScaleOp::Negate));
        assert_eq!(scale_pixel(1, 0, 100, F), (100, ScaleOp::Pass));
        // exponent clamps: 64 = 2^6 > 16-8-2 = 6 is fine, 2^-12 clamps to -8
        assert_eq!(scale_pixel(64, 0, 1, F).1, ScaleOp::ShiftLeft(6));
        assert_eq!(scale_pixel(1, 12, 256, F), (1, ScaleOp::ShiftRight(8)));
    }

    #[test]
    fn pow2_encoder_multi_spike() {
        let w = WeightMatrix::new(1, 1, WeightKind::Pow2, 8, 0, vec![4]).unwrap();
        let cfg = EncoderConfig::new(1, 1, w).unwrap();
        let trains = encode_image(&flat(1, 256), &cfg).unwrap();
        assert_eq!(trains[0].absolute(), vec![(0, 0); 4]);
    }
}
