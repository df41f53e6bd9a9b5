//! Comparison-tree spike sorter.
//!
//! Per-synapse delta-time streams enter at the leaves of a binary tree of
//! comparators. Every comparator forwards the smaller (earlier) of its two
//! input registers, then subtracts the forwarded value from the other input,
//! so no register ever holds more than a single delta. The comparison
//! outcomes along a spike's path spell out its synapse index: the upper
//! input contributes a `0`, the lower a `1`, the deepest comparison being the
//! least significant bit.
//!
//! The model is synchronous: one call to [`SorterState::step`] is one clock.
//! A register consumed by its parent is refilled in the same clock, so after
//! a fill latency of `log2(S)` clocks one spike leaves the root per clock.

use crate::model::{DeltaSpike, SpikeTrain};

/// Contents of one tree register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SorterNode {
    /// Delta time relative to the last spike forwarded by the parent.
    pub value: u32,
    /// Comparison outcomes accumulated so far, LSB = deepest comparison.
    pub path_bits: u32,
    /// Number of comparisons this value has passed.
    pub depth: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    /// Empty, more spikes may still arrive from below.
    Pending,
    Valid(SorterNode),
    /// Empty sentinel: the subtree is drained. Compares above every value.
    Exhausted,
}

/// Registers and input queues of a sorter with `S` synapses, padded to the
/// next power of two with permanently exhausted inputs.
#[derive(Debug, Clone)]
pub struct SorterState {
    synapses: usize,
    /// `levels[0]` are the leaf registers, the last level is the root.
    levels: Vec<Vec<Slot>>,
    queues: Vec<Vec<u16>>,
    heads: Vec<usize>,
    clock: u64,
    emitted: u64,
    last_emit_clock: u64,
    max_value: u32,
}

impl SorterState {
    /// Load the per-synapse streams. Stream `i` feeds synapse `i`; the
    /// `synapse_index` fields of the input spikes are not consulted.
    pub fn new(streams: &[SpikeTrain]) -> Self {
        let synapses = streams.len();
        let width = synapses.max(1).next_power_of_two();
        let depth = width.trailing_zeros() as usize;

        let mut queues: Vec<Vec<u16>> = streams
            .iter()
            .map(|s| s.iter().map(|d| d.delta_time).collect())
            .collect();
        queues.resize(width, Vec::new());

        let mut levels = Vec::with_capacity(depth + 1);
        for level in 0..=depth {
            levels.push(vec![Slot::Pending; width >> level]);
        }
        let mut state = SorterState {
            synapses,
            levels,
            queues,
            heads: vec![0; width],
            clock: 0,
            emitted: 0,
            last_emit_clock: 0,
            max_value: 0,
        };
        for leaf in 0..width {
            state.refill_leaf(leaf);
        }
        state
    }

    fn refill_leaf(&mut self, leaf: usize) {
        let head = self.heads[leaf];
        self.levels[0][leaf] = match self.queues[leaf].get(head) {
            Some(&d) => {
                self.heads[leaf] += 1;
                self.max_value = self.max_value.max(d as u32);
                Slot::Valid(SorterNode {
                    value: d as u32,
                    path_bits: 0,
                    depth: 0,
                })
            }
            None => Slot::Exhausted,
        };
    }

    /// Number of real (unpadded) synapses.
    pub fn synapses(&self) -> usize {
        self.synapses
    }

    /// Comparator levels between a leaf and the output, `ceil(log2 S)`.
    pub fn tree_depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn is_done(&self) -> bool {
        matches!(self.levels.last().unwrap()[0], Slot::Exhausted)
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Clock on which the last spike left the root.
    pub fn last_emit_clock(&self) -> u64 {
        self.last_emit_clock
    }

    /// Largest value any register has held so far.
    pub fn max_register_value(&self) -> u32 {
        self.max_value
    }

    /// Advance one clock. Returns the spike leaving the root, if any.
    pub fn step(&mut self) -> Option<DeltaSpike> {
        if self.is_done() {
            return None;
        }
        self.clock += 1;
        let top = self.levels.len() - 1;

        let out = match self.levels[top][0] {
            Slot::Valid(node) => {
                self.levels[top][0] = Slot::Pending;
                self.emitted += 1;
                self.last_emit_clock = self.clock;
                Some(DeltaSpike::new(node.value as u16, node.path_bits))
            }
            _ => None,
        };

        // Top-down so that a register drained this clock is refilled this clock.
        for level in (1..=top).rev() {
            for j in 0..self.levels[level].len() {
                if self.levels[level][j] == Slot::Pending {
                    self.compare(level, j);
                }
            }
        }
        for leaf in 0..self.levels[0].len() {
            if self.levels[0][leaf] == Slot::Pending {
                self.refill_leaf(leaf);
            }
        }
        out
    }

    /// Fill register `j` of `level` from its two children if both are decided.
    fn compare(&mut self, level: usize, j: usize) {
        let (upper, lower) = (2 * j, 2 * j + 1);
        let below = &mut self.levels[level - 1];
        let bit = 1u32 << (level - 1);
        let winner = match (below[upper], below[lower]) {
            (Slot::Exhausted, Slot::Exhausted) => {
                self.levels[level][j] = Slot::Exhausted;
                return;
            }
            (Slot::Pending, _) | (_, Slot::Pending) => return,
            (Slot::Valid(a), Slot::Exhausted) => {
                below[upper] = Slot::Pending;
                a
            }
            (Slot::Exhausted, Slot::Valid(b)) => {
                below[lower] = Slot::Pending;
                SorterNode {
                    path_bits: b.path_bits | bit,
                    ..b
                }
            }
            (Slot::Valid(a), Slot::Valid(b)) => {
                // Upper input wins ties.
                if a.value <= b.value {
                    below[upper] = Slot::Pending;
                    below[lower] = Slot::Valid(SorterNode {
                        value: b.value - a.value,
                        ..b
                    });
                    a
                } else {
                    below[lower] = Slot::Pending;
                    below[upper] = Slot::Valid(SorterNode {
                        value: a.value - b.value,
                        ..a
                    });
                    SorterNode {
                        path_bits: b.path_bits | bit,
                        ..b
                    }
                }
            }
        };
        self.levels[level][j] = Slot::Valid(SorterNode {
            depth: level as u8,
            ..winner
        });
    }
}

/// Single comparator: forward the smaller input (upper wins ties) and return
/// `(forwarded, bit, residue_upper, residue_lower)`; the forwarded input's
/// residue is 0.
pub fn compare_and_subtract(upper: u32, lower: u32) -> (u32, u8, u32, u32) {
    let m = upper.min(lower);
    let bit = u8::from(lower < upper);
    (m, bit, upper - m, lower - m)
}

/// Advance the sorter one clock.
pub fn sorter_step(state: &mut SorterState) -> Option<DeltaSpike> {
    state.step()
}

/// Merge per-synapse streams into one time-sorted stream.
pub fn sort_streams(streams: &[SpikeTrain]) -> SpikeTrain {
    let mut state = SorterState::new(streams);
    run_to_completion(&mut state)
}

/// Step until the root is exhausted, collecting every emitted spike.
pub fn run_to_completion(state: &mut SorterState) -> SpikeTrain {
    let mut out = SpikeTrain::default();
    while !state.is_done() {
        if let Some(spike) = state.step() {
            out.push(spike);
        }
    }
    out
}

/// Cycle estimate for a completed sort: fill latency plus one clock per spike.
pub fn sorter_cycle_cost(state: &SorterState) -> u64 {
    state.tree_depth() as u64 + state.emitted()
}
