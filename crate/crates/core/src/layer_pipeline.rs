//! Sorter → weight memory → neuron cores → LOPD, layer after layer.
//!
//! The layer controller keeps one global clock per layer. A spike with a
//! non-zero delta closes the previous timestep (threshold phase, LOPD
//! serialization), then every core receives `delta` DECAY selects, and
//! finally the spike's weight row is read in one wide access and added to
//! every core. Output spikes carry the time of the input that triggered them.
//!
//! Cycle accounting is an estimate layered on top of the functional model:
//! one clock per weight fetch, one per accumulation, one per time unit of
//! decay, one per threshold phase, and one per LOPD detection (plus one to
//! see an empty vector).

use crate::error::Error;
use crate::fixed::{FixedPoint, Format};
use crate::lopd::{drain, drain_cycles, SpikeVector};
use crate::model::{DeltaSpike, NetworkConfig, SpikeTrain, WeightMatrix};
use crate::neuron_core::NeuronState;
use crate::spike_sorter::{run_to_completion, sorter_cycle_cost, SorterState};
use crate::trace::Trace;

/// Per-layer spike and clock counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerCycles {
    pub spikes_in: u64,
    pub spikes_out: u64,
    pub fetch_cycles: u64,
    pub accum_cycles: u64,
    pub decay_cycles: u64,
    pub threshold_cycles: u64,
    pub lopd_cycles: u64,
}

impl LayerCycles {
    pub fn total_cycles(&self) -> u64 {
        self.fetch_cycles
            + self.accum_cycles
            + self.decay_cycles
            + self.threshold_cycles
            + self.lopd_cycles
    }

    pub fn add(&mut self, o: &LayerCycles) {
        self.spikes_in += o.spikes_in;
        self.spikes_out += o.spikes_out;
        self.fetch_cycles += o.fetch_cycles;
        self.accum_cycles += o.accum_cycles;
        self.decay_cycles += o.decay_cycles;
        self.threshold_cycles += o.threshold_cycles;
        self.lopd_cycles += o.lopd_cycles;
    }
}

/// Cycle accounting for one or more inferences. Merging is a plain sum, so
/// batch aggregation does not depend on completion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleReport {
    pub images: u64,
    pub sorter_cycles: u64,
    pub layers: Vec<LayerCycles>,
    /// Sum over images of the slowest stage (sorter or any layer).
    pub pipelined_cycles: u64,
    pub saturations: u64,
}

impl CycleReport {
    pub fn merge(&mut self, other: &CycleReport) {
        self.images += other.images;
        self.sorter_cycles += other.sorter_cycles;
        if self.layers.len() < other.layers.len() {
            self.layers
                .resize(other.layers.len(), LayerCycles::default());
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add(b);
        }
        self.pipelined_cycles += other.pipelined_cycles;
        self.saturations += other.saturations;
    }

    pub fn totals(&self) -> LayerCycles {
        let mut t = LayerCycles::default();
        for l in &self.layers {
            t.add(l);
        }
        t
    }

    /// Sorter plus every layer, run back to back.
    pub fn sequential_cycles(&self) -> u64 {
        self.sorter_cycles + self.totals().total_cycles()
    }

    pub fn images_per_second(&self, clock_hz: f64) -> f64 {
        rate(self.images, self.sequential_cycles(), clock_hz)
    }

    /// Throughput when stages overlap across images.
    pub fn pipelined_images_per_second(&self, clock_hz: f64) -> f64 {
        rate(self.images, self.pipelined_cycles, clock_hz)
    }
}

fn rate(images: u64, cycles: u64, clock_hz: f64) -> f64 {
    if cycles == 0 {
        return f64::INFINITY;
    }
    clock_hz * images as f64 / cycles as f64
}

/// Mutable state of one layer during an inference.
#[derive(Debug, Clone)]
pub struct LayerState<'a> {
    neurons: Vec<NeuronState>,
    weights: &'a WeightMatrix,
    aligned: &'a [i64],
    current_time: u64,
    /// Input arrived at `current_time` and the threshold phase is still due.
    open: bool,
    pending_out: Vec<(u64, u32)>,
    cycles: LayerCycles,
}

impl<'a> LayerState<'a> {
    fn new(weights: &'a WeightMatrix, aligned: &'a [i64], theta: FixedPoint) -> Self {
        LayerState {
            neurons: vec![NeuronState::new(theta); weights.out_count()],
            weights,
            aligned,
            current_time: 0,
            open: false,
            pending_out: Vec::new(),
            cycles: LayerCycles::default(),
        }
    }

    pub fn current_time(&self) -> u64 {
        self.current_time
    }

    pub fn neurons(&self) -> &[NeuronState] {
        &self.neurons
    }

    pub fn cycles(&self) -> &LayerCycles {
        &self.cycles
    }

    pub fn saturations(&self) -> u64 {
        self.neurons.iter().map(|n| n.saturations as u64).sum()
    }

    /// Process one input spike.
    pub fn consume(&mut self, spike: DeltaSpike) -> Result<(), Error> {
        let idx = spike.synapse_index as usize;
        if idx >= self.weights.in_count() {
            return Err(Error::SynapseOutOfRange {
                index: spike.synapse_index,
                fan_in: self.weights.in_count(),
            });
        }
        if spike.delta_time > 0 {
            if self.open {
                self.threshold_phase();
            }
            let dt = spike.delta_time as u64;
            for n in &mut self.neurons {
                n.decay(dt);
            }
            self.cycles.decay_cycles += dt;
            self.current_time += dt;
        }
        let out = self.weights.out_count();
        let row = &self.aligned[idx * out..(idx + 1) * out];
        self.cycles.fetch_cycles += 1;
        for (n, &w) in self.neurons.iter_mut().zip(row) {
            n.accumulate_raw(w);
        }
        self.cycles.accum_cycles += 1;
        self.cycles.spikes_in += 1;
        self.open = true;
        Ok(())
    }

    /// Threshold every core at `current_time` and serialize the spikes.
    /// A core that fired `k` times appears in `k` successive LOPD rounds.
    fn threshold_phase(&mut self) {
        self.cycles.threshold_cycles += 1;
        let counts: Vec<u32> = self.neurons.iter_mut().map(|n| n.threshold()).collect();
        let width = counts.len();
        let mut round = 1;
        loop {
            let v = SpikeVector::from_positions(
                width,
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c >= round)
                    .map(|(i, _)| i),
            );
            if round > 1 && v.is_zero() {
                break;
            }
            self.cycles.lopd_cycles += drain_cycles(&v);
            for pos in drain(&v) {
                self.pending_out.push((self.current_time, pos as u32));
            }
            self.cycles.spikes_out += v.count_ones() as u64;
            if v.is_zero() {
                break;
            }
            round += 1;
        }
        self.open = false;
    }

    /// Run the last threshold phase and return the layer's output stream.
    pub fn flush(mut self) -> (SpikeTrain, LayerCycles, u64) {
        if self.open {
            self.threshold_phase();
        }
        let saturations = self.saturations();
        let train = SpikeTrain::from_absolute(self.pending_out)
            .expect("layer output times are non-decreasing");
        (train, self.cycles, saturations)
    }
}

/// Process one spike through `layer`.
pub fn layer_consume(layer: &mut LayerState<'_>, spike: DeltaSpike) -> Result<(), Error> {
    layer.consume(spike)
}

/// Close the layer and return its output stream.
pub fn layer_flush(layer: LayerState<'_>) -> SpikeTrain {
    layer.flush().0
}

/// A chain of fully connected LIF layers plus the weights widened to the
/// potential format once, up front.
#[derive(Debug, Clone)]
pub struct Network {
    theta: FixedPoint,
    layers: Vec<WeightMatrix>,
    aligned: Vec<Vec<i64>>,
}

/// Everything one inference produces.
#[derive(Debug, Clone)]
pub struct Inference {
    pub class: usize,
    pub report: CycleReport,
    /// Sorted network input.
    pub input: SpikeTrain,
    /// Output stream of every layer.
    pub layer_outputs: Vec<SpikeTrain>,
    /// Output-layer spike count per neuron.
    pub output_counts: Vec<u64>,
}

impl Inference {
    /// Layer 0 is the sorted input, layer `l` the output of layer `l`.
    pub fn trace(&self) -> Trace {
        Trace::from_trains(std::iter::once(&self.input).chain(&self.layer_outputs))
    }
}

fn spike_counts(train: &SpikeTrain, width: usize) -> Vec<u64> {
    let mut counts = vec![0u64; width];
    for s in train {
        counts[s.synapse_index as usize] += 1;
    }
    counts
}

/// Index of the largest count; the lowest index wins ties, 0 when empty.
pub fn argmax_lowest(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl Network {
    pub fn new(layers: Vec<WeightMatrix>, potential: Format) -> Result<Self, Error> {
        let theta = FixedPoint::one(potential)?;
        Self::with_theta(layers, theta)
    }

    pub fn with_theta(layers: Vec<WeightMatrix>, theta: FixedPoint) -> Result<Self, Error> {
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_count() != pair[1].in_count() {
                return Err(Error::Shape(format!(
                    "layer {} has {} outputs but layer {} expects {} inputs",
                    l + 1,
                    pair[0].out_count(),
                    l + 2,
                    pair[1].in_count()
                )));
            }
        }
        let aligned = layers
            .iter()
            .map(|w| w.aligned_to(theta.format()))
            .collect();
        Ok(Network {
            theta,
            layers,
            aligned,
        })
    }

    /// Check that `weights` chain along `cfg.layer_sizes` and build.
    pub fn from_config(cfg: &NetworkConfig, weights: Vec<WeightMatrix>) -> Result<Self, Error> {
        cfg.validate()?;
        let sizes = &cfg.layer_sizes;
        if weights.len() + 1 != sizes.len() {
            return Err(Error::Shape(format!(
                "config has {} layers of neurons after the input, weights provide {}",
                sizes.len() - 1,
                weights.len()
            )));
        }
        for (l, w) in weights.iter().enumerate() {
            if w.in_count() != sizes[l] || w.out_count() != sizes[l + 1] {
                return Err(Error::Shape(format!(
                    "layer {} weights are {}x{}, config expects {}x{}",
                    l + 1,
                    w.in_count(),
                    w.out_count(),
                    sizes[l],
                    sizes[l + 1]
                )));
            }
        }
        Self::with_theta(weights, cfg.theta)
    }

    pub fn layers(&self) -> &[WeightMatrix] {
        &self.layers
    }

    pub fn theta(&self) -> FixedPoint {
        self.theta
    }

    pub fn potential(&self) -> Format {
        self.theta.format()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_count()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().out_count()
    }

    /// Sort the per-synapse input once and stream it through every layer.
    pub fn infer(&self, input: &[SpikeTrain]) -> Result<Inference, Error> {
        if input.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "network expects {} input streams, got {}",
                self.input_width(),
                input.len()
            )));
        }
        let mut sorter = SorterState::new(input);
        let sorted = run_to_completion(&mut sorter);
        let sorter_cycles = sorter_cycle_cost(&sorter);

        let mut report = CycleReport {
            images: 1,
            sorter_cycles,
            ..CycleReport::default()
        };
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut stream = &sorted;
        for (weights, aligned) in self.layers.iter().zip(&self.aligned) {
            let mut layer = LayerState::new(weights, aligned, self.theta);
            for &spike in stream {
                layer.consume(spike)?;
            }
            let (out, cycles, saturations) = layer.flush();
            report.layers.push(cycles);
            report.saturations += saturations;
            outputs.push(out);
            stream = outputs.last().unwrap();
        }
        report.pipelined_cycles = report
            .layers
            .iter()
            .map(LayerCycles::total_cycles)
            .chain(std::iter::once(sorter_cycles))
            .max()
            .unwrap_or(0);

        let counts = spike_counts(outputs.last().unwrap(), self.output_width());
        Ok(Inference {
            class: argmax_lowest(&counts),
            report,
            input: sorted,
            layer_outputs: outputs,
            output_counts: counts,
        })
    }
}

/// Build the network described by `cfg` and run one inference.
pub fn network_infer(
    cfg: &NetworkConfig,
    weights: Vec<WeightMatrix>,
    input: &[SpikeTrain],
) -> Result<(usize, CycleReport), Error> {
    let net = Network::from_config(cfg, weights)?;
    let inf = net.infer(input)?;
    Ok((inf.class, inf.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightKind;

    const F: Format = Format::POTENTIAL;

    fn theta() -> FixedPoint {
        FixedPoint::one(F).unwrap()
    }

    /// 8-bit weights with 6 fraction bits from reals.
    fn fixed(in_count: usize, out_count: usize, values: &[f64]) -> WeightMatrix {
        WeightMatrix::new(
            in_count,
            out_count,
            WeightKind::Fixed,
            8,
            6,
            values.iter().map(|v| (v * 64.0).round() as i16).collect(),
        )
        .unwrap()
    }

    #[test]
    fn same_time_ternary_accumulation() {
        let mut data = vec![0i8; 4 * 4];
        data[3 * 4 + 1] = 1;
        data[3 * 4 + 2] = -1;
        let w = WeightMatrix::ternary(4, 4, data).unwrap();
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer_consume(&mut layer, DeltaSpike::new(0, 3)).unwrap();
        let p: Vec<i32> = layer.neurons().iter().map(|n| n.potential.raw()).collect();
        assert_eq!(p, vec![0, 256, -256, 0]);
        assert_eq!(layer.cycles().decay_cycles, 0);
        assert_eq!(layer.cycles().fetch_cycles, 1);
    }

    #[test]
    fn delta_decays_every_neuron() {
        let w = fixed(1, 3, &[0.75, -0.5, 0.25]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer.consume(DeltaSpike::new(0, 0)).unwrap();
        layer.consume(DeltaSpike::new(2, 0)).unwrap();
        let p: Vec<f64> = layer
            .neurons()
            .iter()
            .map(|n| n.potential.to_f64())
            .collect();
        assert_eq!(
            p,
            vec![0.75 / 4.0 + 0.75, -0.5 / 4.0 - 0.5, 0.25 / 4.0 + 0.25]
        );
        assert_eq!(layer.cycles().decay_cycles, 2);
        assert_eq!(layer.current_time(), 2);
    }

    #[test]
    fn threshold_waits_for_all_same_time_spikes() {
        // weights 0.6 and 0.5 onto one neuron, both at time 3
        let w = fixed(2, 1, &[0.6, 0.5]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer.consume(DeltaSpike::new(3, 0)).unwrap();
        assert_eq!(layer.cycles().spikes_out, 0);
        layer.consume(DeltaSpike::new(0, 1)).unwrap();
        let out = layer_flush(layer);
        assert_eq!(out.absolute(), vec![(3, 0)]);
    }

    #[test]
    fn flush_orders_by_lopd() {
        let mut values = vec![0.0; 8];
        values[2] = 1.0;
        values[5] = 1.0;
        let w = fixed(1, 8, &values);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer.consume(DeltaSpike::new(7, 0)).unwrap();
        let out = layer_flush(layer);
        let pairs: Vec<_> = out
            .iter()
            .map(|s| (s.delta_time, s.synapse_index))
            .collect();
        assert_eq!(pairs, vec![(7, 5), (0, 2)]);
    }

    #[test]
    fn flush_without_crossings_is_empty() {
        let w = fixed(1, 2, &[0.5, 0.25]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer.consume(DeltaSpike::new(1, 0)).unwrap();
        assert!(layer_flush(layer).is_empty());

        let w = fixed(1, 4, &[0.0, 0.0, 1.5, 0.0]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        layer.consume(DeltaSpike::new(0, 0)).unwrap();
        assert_eq!(layer_flush(layer).absolute(), vec![(0, 2)]);
    }

    #[test]
    fn multi_spike_serializes_in_rounds() {
        let w = fixed(1, 3, &[1.0, 1.0, 1.0]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        for _ in 0..2 {
            layer.consume(DeltaSpike::new(0, 0)).unwrap();
        }
        let (out, cycles, _) = layer.flush();
        assert_eq!(
            out.absolute(),
            vec![(0, 2), (0, 1), (0, 0), (0, 2), (0, 1), (0, 0)]
        );
        assert_eq!(cycles.spikes_out, 6);
        assert_eq!(cycles.lopd_cycles, 6 + 2);
    }

    #[test]
    fn out_of_range_synapse_fails_fast() {
        let w = fixed(1, 1, &[0.5]);
        let aligned = w.aligned_to(F);
        let mut layer = LayerState::new(&w, &aligned, theta());
        assert!(matches!(
            layer.consume(DeltaSpike::new(0, 1)),
            Err(Error::SynapseOutOfRange {
                index: 1,
                fan_in: 1
            })
        ));
    }

    #[test]
    fn quiescent_network_classifies_zero() {
        let net = Network::new(vec![fixed(3, 4, &[0.5; 12]), fixed(4, 2, &[0.5; 8])], F).unwrap();
        let inf = net.infer(&vec![SpikeTrain::default(); 3]).unwrap();
        assert_eq!(inf.class, 0);
        assert_eq!(inf.report.totals().spikes_in, 0);
        assert_eq!(inf.report.totals().spikes_out, 0);
    }

    #[test]
    fn hand_built_net_selects_class_one() {
        // input 0 drives hidden 0 over threshold; hidden 0 drives output 1 only.
        let l1 = fixed(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let l2 = fixed(2, 3, &[0.0, 1.5, 0.25, 0.0, 0.0, 0.0]);
        let net = Network::new(vec![l1, l2], F).unwrap();
        let input = vec![
            SpikeTrain::from_times(0, &[2]).unwrap(),
            SpikeTrain::default(),
        ];
        let inf = net.infer(&input).unwrap();
        assert_eq!(inf.class, 1);
        assert_eq!(inf.layer_outputs[1].absolute(), vec![(2, 1)]);
    }

    #[test]
    fn shape_errors() {
        assert!(Network::new(vec![fixed(2, 3, &[0.0; 6]), fixed(2, 1, &[0.0; 2])], F).is_err());
        let net = Network::new(vec![fixed(2, 1, &[0.0; 2])], F).unwrap();
        assert!(net.infer(&[SpikeTrain::default()]).is_err());
        let cfg = NetworkConfig::new(4, 3, &[2]).unwrap();
        assert!(network_infer(&cfg, vec![fixed(3, 2, &[0.0; 6])], &[]).is_err());
    }

    #[test]
    fn report_merge_is_commutative() {
        let a = CycleReport {
            images: 1,
            sorter_cycles: 5,
            layers: vec![LayerCycles {
                spikes_in: 3,
                accum_cycles: 3,
                ..Default::default()
            }],
            pipelined_cycles: 5,
            saturations: 0,
        };
        let b = CycleReport {
            images: 2,
            sorter_cycles: 7,
            layers: vec![
                LayerCycles {
                    decay_cycles: 9,
                    ..Default::default()
                };
                2
            ],
            pipelined_cycles: 9,
            saturations: 1,
        };
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.sequential_cycles(), 5 + 7 + 3 + 18);
    }
}
