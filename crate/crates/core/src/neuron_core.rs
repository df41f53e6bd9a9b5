//! One LIF neuron datapath: a potential register, an adder, a comparator and
//! a select mux choosing between "shift right once" and "add weight".

use crate::fixed::FixedPoint;

/// Mux input of the neuron core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Select {
    /// Multiply the potential by β = 0.5 (one arithmetic right shift).
    Decay,
    /// Add a weight already widened to the potential format.
    Accum(FixedPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronState {
    pub potential: FixedPoint,
    pub theta: FixedPoint,
    /// Accumulations that hit the format bounds.
    pub saturations: u32,
}

impl NeuronState {
    /// Resting neuron (potential 0) with threshold `theta`.
    pub fn new(theta: FixedPoint) -> Self {
        NeuronState {
            potential: FixedPoint::zero(theta.format()),
            theta,
            saturations: 0,
        }
    }

    pub fn with_potential(potential: FixedPoint, theta: FixedPoint) -> Self {
        assert_eq!(potential.format(), theta.format());
        NeuronState {
            potential,
            theta,
            saturations: 0,
        }
    }

    #[inline]
    pub fn apply(&mut self, select: Select) {
        match select {
            Select::Decay => self.potential = self.potential.decay(1),
            Select::Accum(w) => self.accumulate_raw(
                self.potential
                    .format()
                    .align_raw(w.raw() as i64, w.format().frac_bits()),
            ),
        }
    }

    /// Shift right `steps` times in one go.
    #[inline]
    pub fn decay(&mut self, steps: u64) {
        self.potential = self.potential.decay(steps);
    }

    /// Saturating add of a raw value in the potential format.
    #[inline]
    pub fn accumulate_raw(&mut self, raw: i64) {
        let (p, sat) = self.potential.saturating_add_raw(raw);
        self.potential = p;
        self.saturations += u32::from(sat);
    }

    /// Compare against θ and subtract θ once per emitted spike until the
    /// potential is below θ. Returns the number of spikes.
    #[inline]
    pub fn threshold(&mut self) -> u32 {
        let theta = self.theta.raw();
        let mut spikes = 0;
        while self.potential.raw() >= theta {
            self.potential = self.potential.sub_raw(theta);
            spikes += 1;
        }
        spikes
    }
}

pub fn apply_select(mut state: NeuronState, select: Select) -> NeuronState {
    state.apply(select);
    state
}

pub fn threshold_phase(mut state: NeuronState) -> (NeuronState, u32) {
    let n = state.threshold();
    (state, n)
}
