//! Deterministic stand-in data: seven-segment digit images and randomly
//! initialized (untrained) weights with the MNIST network's shapes. Used for
//! fixtures, benchmarks, and the throughput estimate when no trained weights
//! or dataset are at hand.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{patch_count, WeightKind, WeightMatrix};

// Segments a..g as (row0, col0, row1, col1) on a 28x28 canvas.
const SEGMENTS: [(i32, i32, i32, i32); 7] = [
    (5, 9, 5, 18),    // a
    (5, 18, 13, 18),  // b
    (14, 18, 22, 18), // c
    (22, 9, 22, 18),  // d
    (14, 9, 22, 9),   // e
    (5, 9, 13, 9),    // f
    (13, 9, 13, 18),  // g
];

const DIGIT_SEGMENTS: [u8; 10] = [
    0b0111111, // 0: a b c d e f
    0b0000110, // 1: b c
    0b1011011, // 2: a b d e g
    0b1001111, // 3: a b c d g
    0b1100110, // 4: b c f g
    0b1101101, // 5: a c d f g
    0b1111101, // 6: a c d e f g
    0b0000111, // 7: a b c
    0b1111111, // 8
    0b1101111, // 9: a b c d f g
];

/// One 28×28 digit glyph with random shift, stroke width and intensity.
pub fn digit_image(rng: &mut impl Rng, digit: u8) -> Vec<u8> {
    let side = 28i32;
    let mut img = vec![0u8; (side * side) as usize];
    let dx = rng.gen_range(-3..=3);
    let dy = rng.gen_range(-2..=2);
    let half = rng.gen_range(0..=1);
    let peak: u8 = rng.gen_range(190..=255);
    let mut paint = |r: i32, c: i32, v: u8| {
        if (0..side).contains(&r) && (0..side).contains(&c) {
            let px = &mut img[(r * side + c) as usize];
            *px = (*px).max(v);
        }
    };
    for (s, &(r0, c0, r1, c1)) in SEGMENTS.iter().enumerate() {
        if DIGIT_SEGMENTS[digit as usize] >> s & 1 == 0 {
            continue;
        }
        for r in r0.min(r1)..=r0.max(r1) {
            for c in c0.min(c1)..=c0.max(c1) {
                for wr in -half..=half + 1 {
                    for wc in -half..=half + 1 {
                        paint(r + dy + wr, c + dx + wc, peak);
                    }
                }
                // soft edge
                for (er, ec) in [(-half - 1, 0), (half + 2, 0), (0, -half - 1), (0, half + 2)] {
                    paint(r + dy + er, c + dx + ec, peak / 3);
                }
            }
        }
    }
    img
}

/// `count` digit images with labels cycling through 0..=9.
pub fn digit_dataset(seed: u64, count: usize) -> (Vec<Vec<u8>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
    let images = labels.iter().map(|&d| digit_image(&mut rng, d)).collect();
    (images, labels)
}

/// Untrained weights for a `p`-patch encoder followed by `tail` layers.
///
/// Encoder weights are ternary with P(+1) = 0.4, P(0) = 0.4, P(−1) = 0.2.
/// Hidden weights are drawn Kaiming-uniform, `U(−b, b)` with
/// `b = sqrt(6 / fan_in)` in units of θ, then exported as 8-bit FIXED with
/// the largest `frac_bits` that keeps the 99th-percentile magnitude in range.
pub fn random_network_weights(
    seed: u64,
    side: usize,
    patch: usize,
    tail: &[usize],
) -> Vec<WeightMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = patch_count(side, patch);
    let enc: Vec<i8> = (0..patch * patch * y)
        .map(|_| match rng.gen_range(0..10) {
            0..=3 => 1,
            4..=7 => 0,
            _ => -1,
        })
        .collect();
    let mut layers = vec![WeightMatrix::ternary(patch * patch, y, enc).unwrap()];
    let mut fan_in = y;
    for &width in tail {
        let b = (6.0 / fan_in as f64).sqrt();
        let real: Vec<f64> = (0..fan_in * width).map(|_| rng.gen_range(-b..b)).collect();
        layers.push(quantize_fixed8(fan_in, width, &real));
        fan_in = width;
    }
    layers
}

/// Round real weights to 8-bit FIXED, choosing `frac_bits` from the
/// 99th-percentile magnitude; outliers saturate.
pub fn quantize_fixed8(in_count: usize, out_count: usize, real: &[f64]) -> WeightMatrix {
    let mut mags: Vec<f64> = real.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let p99 = mags.get(mags.len() * 99 / 100).copied().unwrap_or(0.0);
    let frac = (0..=7u8)
        .rev()
        .find(|&f| p99 * f64::from(1u32 << f) <= 127.0)
        .unwrap_or(0);
    let scale = f64::from(1u32 << frac);
    let data = real
        .iter()
        .map(|v| (v * scale).round().clamp(-128.0, 127.0) as i16)
        .collect();
    WeightMatrix::new(in_count, out_count, WeightKind::Fixed, 8, frac, data).unwrap()
}
