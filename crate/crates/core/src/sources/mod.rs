//! Source models: emitter geometry, the first-order coherence kernel it
//! produces on the detector grid, and the event samplers for each particle
//! statistics.

#[allow(unused_imports)]
use num_traits::Float;
mod grid;
mod kernel;
mod sampling;

pub use grid::{AxisGrid, Grid};
pub use kernel::{build_source_kernel, AxisKernel, CoherenceKernel, ProductMode, MODE_CUTOFF};
pub use sampling::{
    sample_boson_events, sample_chaotic_field, sample_coherent_events,
    sample_distinguishable_events, sample_events, sample_fermion_events,
    sample_projection_events, EventPoint, EventSet,
};

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::model::constants::PLANCK;
use crate::model::Statistics;
use crate::{Error, Result};

/// How emitter positions map to detector-plane phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Propagation {
    /// Light of wavelength λ observed at distance L.
    Photon { wavelength: f64, distance: f64 },
    /// Atoms of mass m after a ballistic flight of duration t.
    Atom { mass: f64, flight_time: f64 },
}

impl Propagation {
    /// Phase gradient κ: an emitter at `u` adds phase `κ·u·(x₁ − x₂)` between
    /// two detector points. `2π/(λL)` for light, `2πm/(ht)` for atoms.
    pub fn phase_rate(&self) -> f64 {
        match *self {
            Propagation::Photon { wavelength, distance } => 2.0 * PI / (wavelength * distance),
            Propagation::Atom { mass, flight_time } => 2.0 * PI * mass / (PLANCK * flight_time),
        }
    }

    /// Correlation length `1/(κ s)` for a source of RMS size `s`.
    pub fn correlation_length(&self, source_size: f64) -> f64 {
        1.0 / (self.phase_rate() * source_size)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Propagation::Photon { wavelength, distance } => {
                wavelength > 0.0 && distance > 0.0 && wavelength.is_finite() && distance.is_finite()
            }
            Propagation::Atom { mass, flight_time } => {
                mass > 0.0 && flight_time > 0.0 && mass.is_finite() && flight_time.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSource(format!("non-positive propagation parameter in {self:?}")))
        }
    }
}

/// A randomly phased point emitter along one source axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Emitter {
    /// Position in the source plane, m.
    pub position: f64,
    /// Relative intensity, > 0.
    pub weight: f64,
}

/// Emitter distribution along one axis. Weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct EmitterProfile {
    emitters: Vec<Emitter>,
}

impl EmitterProfile {
    /// Wraps an emitter list, checking positivity and unit total weight.
    pub fn new(emitters: Vec<Emitter>) -> Result<Self> {
        if emitters.is_empty() {
            return Err(Error::InvalidSource("empty emitter list".into()));
        }
        if emitters
            .iter()
            .any(|e| !(e.weight > 0.0) || !e.position.is_finite() || !e.weight.is_finite())
        {
            return Err(Error::InvalidSource("emitter weights must be positive and finite".into()));
        }
        let total: f64 = emitters.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSource(format!("emitter weights sum to {total}, not 1")));
        }
        Ok(EmitterProfile { emitters })
    }

    /// Rescales arbitrary positive weights to unit total.
    pub fn normalized(mut emitters: Vec<Emitter>) -> Result<Self> {
        let total: f64 = emitters.iter().map(|e| e.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidSource("emitter weights must be positive".into()));
        }
        for e in &mut emitters {
            e.weight /= total;
        }
        EmitterProfile::new(emitters)
    }

    /// A single point emitter: a fully coherent, single-mode source.
    pub fn point() -> Self {
        EmitterProfile {
            emitters: alloc::vec![Emitter { position: 0.0, weight: 1.0 }],
        }
    }

    /// Two equal emitters separated by `separation`.
    pub fn pair(separation: f64) -> Result<Self> {
        EmitterProfile::new(alloc::vec![
            Emitter { position: -0.5 * separation, weight: 0.5 },
            Emitter { position: 0.5 * separation, weight: 0.5 },
        ])
    }

    /// `count` emitters on a regular lattice over ±6 σ with Gaussian weights.
    /// The lattice is fine enough that the resulting coherence is Gaussian
    /// over many correlation lengths before its first alias.
    pub fn gaussian(rms: f64, count: usize) -> Result<Self> {
        if !(rms > 0.0) || count < 2 {
            return Err(Error::InvalidSource("gaussian profile needs rms > 0 and ≥ 2 emitters".into()));
        }
        let half = 6.0 * rms;
        let step = 2.0 * half / (count - 1) as f64;
        let emitters = (0..count)
            .map(|i| {
                let u = -half + step * i as f64;
                Emitter { position: u, weight: (-0.5 * u * u / (rms * rms)).exp() }
            })
            .collect();
        EmitterProfile::normalized(emitters)
    }

    /// `count` equal emitters evenly filling a slit of full width `width`.
    pub fn uniform(width: f64, count: usize) -> Result<Self> {
        if !(width > 0.0) || count < 2 {
            return Err(Error::InvalidSource("uniform profile needs width > 0 and ≥ 2 emitters".into()));
        }
        let step = width / count as f64;
        let emitters = (0..count)
            .map(|i| Emitter { position: -0.5 * width + step * (i as f64 + 0.5), weight: 1.0 })
            .collect();
        EmitterProfile::normalized(emitters)
    }

    pub fn emitters(&self) -> &[Emitter] {
        &self.emitters
    }

    pub fn mean(&self) -> f64 {
        self.emitters.iter().map(|e| e.weight * e.position).sum()
    }

    /// RMS width of the weighted emitter distribution (the source size s).
    pub fn rms(&self) -> f64 {
        let mean = self.mean();
        self.emitters
            .iter()
            .map(|e| e.weight * (e.position - mean).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Complete description of a source.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub statistics: Statistics,
    pub propagation: Propagation,
    /// One emitter profile per grid axis (x, then y, then z). The source is
    /// the product distribution of the per-axis profiles.
    pub profiles: Vec<EmitterProfile>,
    /// Mean detections per shot, > 0.
    pub mean_count: f64,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        self.propagation.validate()?;
        if self.profiles.is_empty() || self.profiles.len() > 3 {
            return Err(Error::InvalidSource(format!(
                "need 1 to 3 emitter profiles, got {}",
                self.profiles.len()
            )));
        }
        if !(self.mean_count > 0.0) || !self.mean_count.is_finite() {
            return Err(Error::InvalidSource(format!("mean_count must be > 0, got {}", self.mean_count)));
        }
        Ok(())
    }

    /// RMS source size along each axis.
    pub fn sizes(&self) -> Vec<f64> {
        self.profiles.iter().map(EmitterProfile::rms).collect()
    }

    /// Expected correlation length along each axis (infinite for a point
    /// source).
    pub fn correlation_lengths(&self) -> Vec<f64> {
        self.sizes()
            .into_iter()
            .map(|s| if s > 0.0 { self.propagation.correlation_length(s) } else { f64::INFINITY })
            .collect()
    }
}
