//! Spike traces: every spike of every layer as `layer,neuron_index,absolute_time`.
//!
//! Layer 0 is the network input (the encoder output when running images).
//! Within a layer, records appear in emission order.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::model::SpikeTrain;

pub const CSV_HEADER: &str = "layer,neuron_index,absolute_time";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// `layers[l]` lists `(neuron_index, absolute_time)` in emission order.
    pub layers: Vec<Vec<(u32, u64)>>,
}

impl Trace {
    pub fn from_trains<'a>(trains: impl IntoIterator<Item = &'a SpikeTrain>) -> Self {
        Trace {
            layers: trains
                .into_iter()
                .map(|t| {
                    t.absolute()
                        .into_iter()
                        .map(|(time, n)| (n, time))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn spike_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Records without header, one per line.
    pub fn to_csv_records(&self) -> String {
        let mut s = String::new();
        for (layer, spikes) in self.layers.iter().enumerate() {
            for &(neuron, time) in spikes {
                let _ = writeln!(s, "{layer},{neuron},{time}");
            }
        }
        s
    }

    pub fn write_records<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(self.to_csv_records().as_bytes())
    }

    /// Parse header-less records back into a trace.
    pub fn parse_records(text: &str) -> Option<Trace> {
        let mut trace = Trace::default();
        for line in text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            if line == CSV_HEADER {
                continue;
            }
            let mut it = line.split(',');
            let layer: usize = it.next()?.parse().ok()?;
            let neuron: u32 = it.next()?.parse().ok()?;
            let time: u64 = it.next()?.parse().ok()?;
            if it.next().is_some() {
                return None;
            }
            if trace.layers.len() <= layer {
                trace.layers.resize(layer + 1, Vec::new());
            }
            trace.layers[layer].push((neuron, time));
        }
        Some(trace)
    }

    /// Index of the first layer whose records differ.
    pub fn first_divergence(&self, other: &Trace) -> Option<usize> {
        let n = self.layers.len().max(other.layers.len());
        (0..n).find(|&l| self.layers.get(l) != other.layers.get(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = Trace {
            layers: vec![vec![(3, 0), (1, 2)], vec![], vec![(0, 9)]],
        };
        let text = t.to_csv_records();
        assert_eq!(text, "0,3,0\n0,1,2\n2,0,9\n");
        let back = Trace::parse_records(&text).unwrap();
        assert_eq!(back.layers[0], t.layers[0]);
        assert_eq!(back.layers[2], t.layers[2]);
        assert!(Trace::parse_records("1,2\n").is_none());
    }
}
