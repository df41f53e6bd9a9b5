//! Randomized hardware-vs-reference equivalence checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fixed::Format;
use crate::layer_pipeline::Network;
use crate::model::{SpikeTrain, WeightKind, WeightMatrix};
use crate::reference_sim::FixedReference;

/// Independent RNG for case `case` of a run seeded with `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

/// A random weight matrix. Mostly 8-bit FIXED; some 16-bit matrices finer
/// than the potential format and some TERNARY ones for variety.
pub fn random_weights(rng: &mut impl Rng, in_count: usize, out_count: usize) -> WeightMatrix {
    let n = in_count * out_count;
    match rng.gen_range(0..10) {
        0 => {
            let data = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
            WeightMatrix::ternary(in_count, out_count, data).unwrap()
        }
        1 | 2 => {
            let frac = rng.gen_range(9..=13);
            let bound = 3i32 << frac;
            let data = (0..n)
                .map(|_| {
                    rng.gen_range(-bound..=bound)
                        .clamp(i16::MIN as i32, i16::MAX as i32) as i16
                })
                .collect();
            WeightMatrix::new(in_count, out_count, WeightKind::Fixed, 16, frac, data).unwrap()
        }
        _ => {
            let frac = rng.gen_range(4..=7);
            let bias = rng.gen_range(-20..=40);
            let data = (0..n)
                .map(|_| (rng.gen_range(-100..=100) + bias).clamp(-128, 127) as i16)
                .collect();
            WeightMatrix::new(in_count, out_count, WeightKind::Fixed, 8, frac, data).unwrap()
        }
    }
}

/// Per-synapse input streams: each synapse fires a few times in `0..=span`.
pub fn random_input(rng: &mut impl Rng, synapses: usize, span: u64) -> Vec<SpikeTrain> {
    (0..synapses)
        .map(|i| {
            if rng.gen_bool(0.3) {
                return SpikeTrain::default();
            }
            let count = rng.gen_range(1..=8);
            let mut times: Vec<u64> = (0..count).map(|_| rng.gen_range(0..=span)).collect();
            times.sort_unstable();
            SpikeTrain::from_times(i as u32, &times).unwrap()
        })
        .collect()
}

/// A network of `2..=4` layers with widths `1..=64` and its input.
pub fn random_case(rng: &mut impl Rng) -> (Network, Vec<SpikeTrain>) {
    let depth = rng.gen_range(2..=4);
    let widths: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=64)).collect();
    let layers = widths
        .windows(2)
        .map(|w| random_weights(rng, w[0], w[1]))
        .collect();
    let net = Network::new(layers, Format::POTENTIAL).unwrap();
    let span = *[5u64, 40, 300].choose(rng).unwrap();
    let input = random_input(rng, widths[0], span);
    (net, input)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseMismatch {
    pub case: u64,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub cases: u64,
    pub matched: u64,
    /// Total spikes compared, summed over every layer of every case.
    pub spikes: u64,
    pub mismatches: Vec<CaseMismatch>,
}

impl VerifySummary {
    pub fn all_match(&self) -> bool {
        self.matched == self.cases
    }
}

/// Compare pipeline traces with the fixed-point reference on `cases` random
/// networks.
pub fn run_equivalence(seed: u64, cases: u64) -> VerifySummary {
    let results: Vec<(u64, Option<usize>, u64)> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, case);
            let (net, input) = random_case(&mut rng);
            let hw = net.infer(&input).expect("random case is well-formed");
            let hw_trace = hw.trace();
            let reference = FixedReference::from_network(&net).run(&input);
            let divergence = hw_trace
                .first_divergence(&reference.trace)
                .or((hw.class != reference.class).then_some(hw_trace.layers.len()));
            (case, divergence, hw_trace.spike_count() as u64)
        })
        .collect();
    let mismatches: Vec<CaseMismatch> = results
        .iter()
        .filter_map(|&(case, d, _)| d.map(|layer| CaseMismatch { case, layer }))
        .collect();
    VerifySummary {
        cases,
        matched: cases - mismatches.len() as u64,
        spikes: results.iter().map(|r| r.2).sum(),
        mismatches,
    }
}
