//! Detector model: time-of-flight conversion, global efficiency, Gaussian
//! position blur and a circular aperture.

use alloc::format;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{ArrivalClock, RngStream, Shot, Statistics};
use crate::sources::{EventPoint, EventSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSpec {
    /// Radius of the active area, m. May be infinite.
    pub aperture_radius: f64,
    /// RMS blur per axis `(x, y, z)`, m.
    pub resolution: [f64; 3],
    /// Probability that a particle reaching the detector is recorded.
    pub efficiency: f64,
    /// Arrival-time to vertical-position conversion.
    pub clock: ArrivalClock,
}

impl DetectorSpec {
    /// 80 mm diameter plate, 0.5 mm transverse RMS resolution, 10 µm in z.
    pub fn helium(clock: ArrivalClock) -> Self {
        DetectorSpec {
            aperture_radius: 0.040,
            resolution: [5e-4, 5e-4, 1e-5],
            efficiency: 1.0,
            clock,
        }
    }

    /// Perfect detector: every particle, exact positions, unbounded area.
    pub fn ideal(clock: ArrivalClock) -> Self {
        DetectorSpec {
            aperture_radius: f64::INFINITY,
            resolution: [0.0; 3],
            efficiency: 1.0,
            clock,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_radius > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "aperture radius must be > 0, got {}",
                self.aperture_radius
            )));
        }
        if self.resolution.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidDetector(format!(
                "resolution must be finite and ≥ 0, got {:?}",
                self.resolution
            )));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidDetector(format!(
                "efficiency must be in (0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.clock.v_ref > 0.0) {
            return Err(Error::InvalidDetector("v_ref must be > 0".into()));
        }
        Ok(())
    }
}

/// `z = v_ref · (t − t_ref)`.
pub fn time_to_vertical(t: f64, spec: &DetectorSpec) -> f64 {
    spec.clock.vertical(t)
}

/// Records one source realization through the detector.
///
/// Each event is kept with probability `efficiency`; kept events are blurred
/// independently per axis (the vertical blur acts on `z` obtained from the
/// arrival time) and dropped if they fall outside the aperture.
pub fn apply_detector<R: Rng + ?Sized>(events: &EventSet, spec: &DetectorSpec, rng: &mut R) -> EventSet {
    let [dx, dy, dz] = spec.resolution;
    let r2 = spec.aperture_radius * spec.aperture_radius;
    let mut out = EventSet::empty(events.statistics);
    for p in &events.points {
        let u: f64 = rng.random();
        if u >= spec.efficiency {
            continue;
        }
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nz: f64 = rng.sample(StandardNormal);
        let x = p.x + dx * nx;
        let y = p.y + dy * ny;
        let t = if dz > 0.0 {
            spec.clock.time(time_to_vertical(p.t, spec) + dz * nz)
        } else {
            p.t
        };
        if x * x + y * y > r2 {
            continue;
        }
        out.points.push(EventPoint { x, y, t });
    }
    out
}

/// Applies the detector to one shot using the shot's own detector stream.
pub fn detect_shot(shot: &Shot, spec: &DetectorSpec, seed: u64) -> Shot {
    let tag = shot.source_tag;
    let events = EventSet::from_shot(shot, tag.unwrap_or(Statistics::Distinguishable));
    let mut rng = RngStream::detector(seed, shot.shot_id).rng();
    let mut shot_out = apply_detector(&events, spec, &mut rng).into_shot(shot.shot_id);
    shot_out.source_tag = tag;
    shot_out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn clock() -> ArrivalClock {
        ArrivalClock::new(0.3, 3.0)
    }

    fn cloud(n: usize) -> EventSet {
        EventSet {
            statistics: Statistics::Boson,
            points: (0..n)
                .map(|i| EventPoint { x: 1e-4 * i as f64, y: -2e-4 * i as f64, t: 0.3 + 1e-6 * i as f64 })
                .collect(),
        }
    }

    #[test]
    fn vertical_conversion() {
        let spec = DetectorSpec::ideal(ArrivalClock::new(0.35, 3.43));
        assert_eq!(time_to_vertical(0.35, &spec), 0.0);
        assert!((time_to_vertical(0.351, &spec) - 3.43e-3).abs() < 1e-12);
        let (a, b) = (0.3512, 0.3497);
        let lhs = time_to_vertical(a, &spec) - time_to_vertical(b, &spec);
        assert!((lhs - 3.43 * (a - b)).abs() < 1e-15);
    }

    #[test]
    fn ideal_detector_is_identity() {
        let ev = cloud(100);
        let mut rng = RngStream::new(1, 1).rng();
        let out = apply_detector(&ev, &DetectorSpec::ideal(clock()), &mut rng);
        assert_eq!(out, ev);
    }

    #[test]
    fn efficiency_thins_binomially() {
        let ev = cloud(10_000);
        let spec = DetectorSpec { efficiency: 0.5, ..DetectorSpec::ideal(clock()) };
        let mut rng = RngStream::new(2, 0).rng();
        let kept = apply_detector(&ev, &spec, &mut rng).len() as f64;
        let sigma = (10_000.0 * 0.25f64).sqrt();
        assert!((kept - 5000.0).abs() < 3.0 * sigma, "kept {kept}");
    }

    #[test]
    fn blur_has_requested_rms() {
        let d = 5e-4;
        let ev = EventSet {
            statistics: Statistics::Boson,
            points: (0..10_000).map(|_| EventPoint { x: 0.0, y: 0.0, t: 0.3 }).collect(),
        };
        let spec = DetectorSpec { resolution: [d, 2.0 * d, d], ..DetectorSpec::ideal(clock()) };
        let mut rng = RngStream::new(3, 0).rng();
        let out = apply_detector(&ev, &spec, &mut rng);
        let rms = |f: &dyn Fn(&EventPoint) -> f64| {
            (out.points.iter().map(|p| f(p).powi(2)).sum::<f64>() / out.len() as f64).sqrt()
        };
        assert!((rms(&|p| p.x) / d - 1.0).abs() < 0.05);
        assert!((rms(&|p| p.y) / (2.0 * d) - 1.0).abs() < 0.05);
        assert!((rms(&|p| spec.clock.vertical(p.t)) / d - 1.0).abs() < 0.05);
    }

    #[test]
    fn aperture_clips() {
        let ev = cloud(100);
        let spec = DetectorSpec { aperture_radius: 1e-3, ..DetectorSpec::ideal(clock()) };
        let mut rng = RngStream::new(4, 0).rng();
        let out = apply_detector(&ev, &spec, &mut rng);
        let inside: Vec<_> = ev.points.iter().filter(|p| p.x * p.x + p.y * p.y <= 1e-6).collect();
        assert_eq!(out.len(), inside.len());
    }

    #[test]
    fn validation() {
        assert!(DetectorSpec::helium(clock()).validate().is_ok());
        assert!(DetectorSpec { efficiency: 0.0, ..DetectorSpec::ideal(clock()) }.validate().is_err());
        assert!(DetectorSpec { aperture_radius: -1.0, ..DetectorSpec::ideal(clock()) }.validate().is_err());
        assert!(DetectorSpec { resolution: [-1.0, 0.0, 0.0], ..DetectorSpec::ideal(clock()) }.validate().is_err());
    }

    #[test]
    fn per_shot_streams_commute_with_partitioning() {
        let spec = DetectorSpec::helium(clock());
        let shots: Vec<Shot> = (0..6).map(|i| cloud(20 + i).into_shot(i as u64)).collect();
        let whole: Vec<Shot> = shots.iter().map(|s| detect_shot(s, &spec, 9)).collect();
        let mut reversed: Vec<Shot> = shots.iter().rev().map(|s| detect_shot(s, &spec, 9)).collect();
        reversed.reverse();
        assert_eq!(whole, reversed);
    }
}
