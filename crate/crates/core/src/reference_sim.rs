//! Event-driven behavioral model of the LIF recursion
//!
//! `P_k = P_{k-1}·β^Δt + Σ w_i s_i − s_out`, β = 0.5, reset by subtraction.
//!
//! This is an oracle for the hardware model, so it deliberately works from
//! absolute times and grouped events rather than from delta streams and
//! per-cycle selects. It shares only the policy rules with the pipeline:
//! multiple spikes per timestep when the potential overshoots, equal-time
//! outputs listed highest neuron first in rounds, and argmax readout with
//! the lowest index winning ties.
//!
//! Two arithmetics are available. [`FixedReference`] reproduces the
//! fixed-point datapath (floor decay, saturating adds) and must match the
//! hardware trace bit for bit. [`RealReference`] is generic over a
//! [`Scalar`] and is only a plausibility check.

use crate::layer_pipeline::{argmax_lowest, Network};
use crate::model::SpikeTrain;
use crate::scalar::Scalar;
use crate::trace::Trace;

/// Input spike at an absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: u64,
    pub synapse_index: u32,
}

/// Which arithmetic the reference network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    /// `f64` potentials.
    Real,
    /// Matched fixed point.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceRun {
    pub trace: Trace,
    pub class: usize,
}

/// Decode per-synapse delta streams and order them by time, then synapse.
pub fn canonical_events(input: &[SpikeTrain]) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, train) in input.iter().enumerate() {
        let mut t = 0u64;
        for s in train {
            t += s.delta_time as u64;
            events.push(Event {
                time: t,
                synapse_index: i as u32,
            });
        }
    }
    events.sort();
    events
}

/// Run one neuron through `(time, weighted input sum)` events in real
/// arithmetic. Returns the spike times (repeated for multiple spikes at one
/// time) and the final potential. Events sharing a time are summed before
/// the threshold test.
pub fn reference_neuron_run<S: Scalar>(events: &[(u64, S)], theta: &S) -> (Vec<u64>, S) {
    let mut p = S::zero();
    let mut last = 0u64;
    let mut spikes = Vec::new();
    for (i, (t, w)) in events.iter().enumerate() {
        p = p * S::half_pow(t - last) + w.clone();
        last = *t;
        if events.get(i + 1).is_some_and(|(next, _)| next == t) {
            continue;
        }
        while p >= *theta {
            p -= theta.clone();
            spikes.push(*t);
        }
    }
    (spikes, p)
}

/// Potential arithmetic plugged into the shared event loop.
trait Arith {
    type P: Clone;
    type W;
    fn zero(&self) -> Self::P;
    fn decay(&self, p: &Self::P, dt: u64) -> Self::P;
    fn add(&self, p: &Self::P, w: &Self::W) -> Self::P;
    /// Subtract θ while above it; number of spikes.
    fn fire(&self, p: &mut Self::P) -> u32;
}

struct FixedArith {
    theta: i64,
    min: i64,
    max: i64,
}

impl Arith for FixedArith {
    type P = i64;
    type W = i64;

    fn zero(&self) -> i64 {
        0
    }

    fn decay(&self, p: &i64, dt: u64) -> i64 {
        p.div_euclid(1i64 << dt.min(62))
    }

    fn add(&self, p: &i64, w: &i64) -> i64 {
        (p + w).clamp(self.min, self.max)
    }

    fn fire(&self, p: &mut i64) -> u32 {
        if *p < self.theta {
            return 0;
        }
        let n = *p / self.theta;
        *p -= n * self.theta;
        n as u32
    }
}

struct RealArith<S> {
    theta: S,
}

impl<S: Scalar> Arith for RealArith<S> {
    type P = S;
    type W = S;

    fn zero(&self) -> S {
        S::zero()
    }

    fn decay(&self, p: &S, dt: u64) -> S {
        p.clone() * S::half_pow(dt)
    }

    fn add(&self, p: &S, w: &S) -> S {
        p.clone() + w.clone()
    }

    fn fire(&self, p: &mut S) -> u32 {
        let mut n = 0;
        while *p >= self.theta {
            *p -= self.theta.clone();
            n += 1;
        }
        n
    }
}

/// Dense layer weights in the arithmetic's own representation, synapse-major.
#[derive(Debug, Clone)]
struct Layer<W> {
    in_count: usize,
    out_count: usize,
    weights: Vec<W>,
}

fn run_layers<A: Arith>(arith: &A, layers: &[Layer<A::W>], input: &[SpikeTrain]) -> ReferenceRun {
    let events = canonical_events(input);
    let mut trace = Trace::default();
    trace
        .layers
        .push(events.iter().map(|e| (e.synapse_index, e.time)).collect());
    let mut current: Vec<(u64, u32)> = events.iter().map(|e| (e.time, e.synapse_index)).collect();

    for layer in layers {
        let mut potentials = vec![arith.zero(); layer.out_count];
        let mut out = Vec::new();
        let mut last = 0u64;
        let mut i = 0;
        while i < current.len() {
            let t = current[i].0;
            let group_end = i + current[i..].iter().take_while(|e| e.0 == t).count();
            for p in &mut potentials {
                *p = arith.decay(p, t - last);
            }
            for &(_, syn) in &current[i..group_end] {
                let syn = syn as usize;
                assert!(syn < layer.in_count, "synapse {syn} out of range");
                let row = &layer.weights[syn * layer.out_count..(syn + 1) * layer.out_count];
                for (p, w) in potentials.iter_mut().zip(row) {
                    *p = arith.add(p, w);
                }
            }
            let counts: Vec<u32> = potentials.iter_mut().map(|p| arith.fire(p)).collect();
            let rounds = counts.iter().copied().max().unwrap_or(0);
            for r in 1..=rounds {
                for n in (0..counts.len()).rev() {
                    if counts[n] >= r {
                        out.push((t, n as u32));
                    }
                }
            }
            last = t;
            i = group_end;
        }
        trace
            .layers
            .push(out.iter().map(|&(t, n)| (n, t)).collect());
        current = out;
    }

    let out_width = layers.last().map_or(0, |l| l.out_count);
    let mut counts = vec![0u64; out_width];
    for &(_, n) in &current {
        counts[n as usize] += 1;
    }
    ReferenceRun {
        trace,
        class: argmax_lowest(&counts),
    }
}

/// Fixed-point reference matched to the hardware datapath.
#[derive(Debug, Clone)]
pub struct FixedReference {
    theta: i64,
    min: i64,
    max: i64,
    layers: Vec<Layer<i64>>,
}

impl FixedReference {
    pub fn from_network(net: &Network) -> Self {
        let fmt = net.potential();
        let pf = fmt.frac_bits() as u32;
        let layers = net
            .layers()
            .iter()
            .map(|w| {
                let wf = w.frac_bits() as u32;
                // value · 2^pf, floored when the weight has finer resolution
                let weights = w
                    .data()
                    .iter()
                    .map(|&raw| {
                        if pf >= wf {
                            raw as i64 * (1i64 << (pf - wf))
                        } else {
                            (raw as i64).div_euclid(1i64 << (wf - pf))
                        }
                    })
                    .collect();
                Layer {
                    in_count: w.in_count(),
                    out_count: w.out_count(),
                    weights,
                }
            })
            .collect();
        FixedReference {
            theta: net.theta().raw() as i64,
            min: fmt.min_raw(),
            max: fmt.max_raw(),
            layers,
        }
    }

    pub fn run(&self, input: &[SpikeTrain]) -> ReferenceRun {
        let arith = FixedArith {
            theta: self.theta,
            min: self.min,
            max: self.max,
        };
        run_layers(&arith, &self.layers, input)
    }
}

/// Real-arithmetic reference over any [`Scalar`].
#[derive(Debug, Clone)]
pub struct RealReference<S> {
    theta: S,
    layers: Vec<Layer<S>>,
}

impl<S: Scalar> RealReference<S> {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|w| Layer {
                in_count: w.in_count(),
                out_count: w.out_count(),
                weights: w
                    .data()
                    .iter()
                    .map(|&raw| S::from_scaled(raw as i64, w.frac_bits() as u32))
                    .collect(),
            })
            .collect();
        let t = net.theta();
        RealReference {
            theta: S::from_scaled(t.raw() as i64, t.format().frac_bits() as u32),
            layers,
        }
    }

    pub fn theta(&self) -> &S {
        &self.theta
    }

    /// Multiply every weight and θ by `k`.
    pub fn scaled(&self, k: &S) -> Self {
        RealReference {
            theta: self.theta.clone() * k.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    in_count: l.in_count,
                    out_count: l.out_count,
                    weights: l.weights.iter().map(|w| w.clone() * k.clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn run(&self, input: &[SpikeTrain]) -> ReferenceRun {
        let arith = RealArith {
            theta: self.theta.clone(),
        };
        run_layers(&arith, &self.layers, input)
    }
}

/// Simulate `net` on `input` in the chosen arithmetic.
pub fn reference_network_run(
    net: &Network,
    input: &[SpikeTrain],
    arithmetic: Arithmetic,
) -> ReferenceRun {
    match arithmetic {
        Arithmetic::Fixed => FixedReference::from_network(net).run(input),
        Arithmetic::Real => RealReference::<f64>::from_network(net).run(input),
    }
}
