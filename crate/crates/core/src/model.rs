//! Domain types shared by every stage: detection events, shots, statistics
//! flavours, the time-of-flight clock and the reproducible random streams.
//!
//! All quantities are SI (meters, seconds, kilograms).

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Physical constants. Fixed values, never configurable.
pub mod constants {
    /// Planck constant, J·s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Standard gravity, m/s². Only used to derive default arrival velocities.
    pub const G_EARTH: f64 = 9.81;
    /// Speed of light, m/s.
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Mass of a helium-4 atom, kg.
    pub const HELIUM4_MASS: f64 = 6.646_477_3e-27;
    /// Mass of a helium-3 atom, kg.
    pub const HELIUM3_MASS: f64 = 5.008_237_3e-27;
}

/// Particle statistics of a source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistics {
    Boson,
    Fermion,
    Coherent,
    Distinguishable,
}

impl Statistics {
    pub const ALL: [Statistics; 4] = [
        Statistics::Boson,
        Statistics::Fermion,
        Statistics::Coherent,
        Statistics::Distinguishable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
            Statistics::Coherent => "coherent",
            Statistics::Distinguishable => "distinguishable",
        }
    }

    /// Sign of the exchange term in g²: +1 bunching, -1 antibunching, 0 none.
    pub fn exchange_sign(self) -> i8 {
        match self {
            Statistics::Boson => 1,
            Statistics::Fermion => -1,
            Statistics::Coherent | Statistics::Distinguishable => 0,
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error returned when a statistics name is not recognised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStatistics;

impl fmt::Display for UnknownStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown statistics (expected boson, fermion, coherent or distinguishable)")
    }
}

impl FromStr for Statistics {
    type Err = UnknownStatistics;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "boson" | "b" | "bose" => Ok(Statistics::Boson),
            "fermion" | "f" | "fermi" => Ok(Statistics::Fermion),
            "coherent" | "c" | "laser" | "bec" => Ok(Statistics::Coherent),
            "distinguishable" | "d" | "independent" | "poisson" => {
                Ok(Statistics::Distinguishable)
            }
            _ => Err(UnknownStatistics),
        }
    }
}

/// Affine map between arrival time and vertical position.
///
/// Every particle reaches the detector with nearly the same velocity, so
/// `z = v_ref · (t − t_ref)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalClock {
    /// Mean arrival time, s.
    pub t_ref: f64,
    /// Common arrival velocity, m/s.
    pub v_ref: f64,
}

impl ArrivalClock {
    pub fn new(t_ref: f64, v_ref: f64) -> Self {
        ArrivalClock { t_ref, v_ref }
    }

    /// Clock of a cloud released from rest that falls for `flight_time`.
    pub fn free_fall(flight_time: f64) -> Self {
        ArrivalClock::new(flight_time, constants::G_EARTH * flight_time)
    }

    pub fn vertical(&self, t: f64) -> f64 {
        self.v_ref * (t - self.t_ref)
    }

    pub fn time(&self, z: f64) -> f64 {
        self.t_ref + z / self.v_ref
    }
}

/// One particle detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionEvent {
    pub shot_id: u64,
    /// Transverse position, m.
    pub x: f64,
    /// Transverse position, m.
    pub y: f64,
    /// Arrival time, s.
    pub t: f64,
}

/// All detections of one source realization (one cloud release).
///
/// Empty shots are legal and must be kept: they enter the normalization of
/// pair histograms and counting statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Shot {
    pub shot_id: u64,
    pub events: Vec<DetectionEvent>,
    pub source_tag: Option<Statistics>,
}

impl Shot {
    /// Builds a shot, stamping `shot_id` on every event and ordering events by
    /// ascending arrival time.
    pub fn new(
        shot_id: u64,
        source_tag: Option<Statistics>,
        mut events: Vec<DetectionEvent>,
    ) -> Self {
        for e in &mut events {
            e.shot_id = shot_id;
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Shot {
            shot_id,
            events,
            source_tag,
        }
    }

    pub fn empty(shot_id: u64, source_tag: Option<Statistics>) -> Self {
        Shot {
            shot_id,
            events: Vec::new(),
            source_tag,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Random generator used for every simulation stream.
pub type StreamRng = ChaCha12Rng;

const DETECTOR_STREAM_BIT: u64 = 1 << 63;

/// Reproducible random stream keyed by `(seed, stream_id)`.
///
/// Distinct stream ids select disjoint ChaCha streams of the same key, so
/// shots can be generated in any order or in parallel with identical output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Stream driving the source sampler of one shot.
    pub fn source(seed: u64, shot_id: u64) -> Self {
        RngStream::new(seed, shot_id & !DETECTOR_STREAM_BIT)
    }

    /// Stream driving the detector model of one shot.
    pub fn detector(seed: u64, shot_id: u64) -> Self {
        RngStream::new(seed, shot_id | DETECTOR_STREAM_BIT)
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
