//! Run configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! # boson run in the helium regime
//! source.statistics = boson
//! source.size_x = 17.63e-6
//! run.shots = 10000
//! ```
//!
//! Lines starting with `#` are comments. Unknown keys and unparsable values
//! are errors; every offending line is reported at once. Keys that are not
//! given keep the defaults listed by [`RunConfig::entries`]; `auto` means
//! the value is derived from the source (see the accessor of that key).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hbt_core::correlator::{Axis, BinAxis, BinningSpec, Normalization, PairingPlan, SignHint};
use hbt_core::detector::DetectorSpec;
use hbt_core::model::constants::{G_EARTH, HELIUM3_MASS, HELIUM4_MASS, SPEED_OF_LIGHT};
use hbt_core::sources::{AxisGrid, EmitterProfile, Grid, Propagation, SourceSpec};
use hbt_core::{ArrivalClock, Statistics};

use crate::error::{LabError, Result};

pub const OUTPUT_DIR_ENV: &str = "HBT_OUTPUT_DIR";

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Smallest automatic emitter count per axis.
pub const MIN_EMITTERS: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Atom,
    Photon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    /// Gaussian emitter density; size is the RMS width.
    Gaussian,
    /// Uniform slit; size is the full width.
    Uniform,
    /// Two emitters; size is their separation.
    Pair,
    /// One emitter; size is ignored.
    Point,
}

impl ProfileKind {
    fn name(self) -> &'static str {
        match self {
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Uniform => "uniform",
            ProfileKind::Pair => "pair",
            ProfileKind::Point => "point",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub statistics: Statistics,
    pub mode: Mode,
    pub mass: f64,
    pub flight_time: f64,
    pub wavelength: f64,
    pub distance: f64,
    pub profile: ProfileKind,
    pub size: [f64; 3],
    /// Emitters per axis; `None` picks enough that Γ does not repeat on the grid.
    pub emitters: Option<usize>,
    pub mean_count: f64,

    pub dims: Vec<Axis>,
    pub points: usize,
    pub pitch_fraction: f64,
    pub pitch: [Option<f64>; 3],

    pub aperture_radius: f64,
    pub resolution: [f64; 3],
    pub efficiency: f64,
    pub v_ref: Option<f64>,
    pub t_ref: Option<f64>,

    pub bin_axes: Option<Vec<Axis>>,
    pub bin_width: [Option<f64>; 3],
    pub bin_max: [Option<f64>; 3],
    pub signed: bool,
    pub pairing: PairingPlan,
    pub normalization: Normalization,

    pub fit_sign: SignHint,

    pub shots: u64,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            statistics: Statistics::Boson,
            mode: Mode::Atom,
            mass: HELIUM4_MASS,
            flight_time: 0.3,
            wavelength: 500e-9,
            distance: 1.0,
            profile: ProfileKind::Gaussian,
            // l = 0.27 mm transverse and 8 mm vertical for helium-4 after 0.3 s
            size: [17.63e-6, 17.63e-6, 0.595e-6],
            emitters: None,
            mean_count: 1000.0,
            dims: vec![Axis::X, Axis::Y],
            points: 128,
            pitch_fraction: 0.125,
            pitch: [None; 3],
            aperture_radius: 0.040,
            resolution: [5e-4, 5e-4, 1e-5],
            efficiency: 1.0,
            v_ref: None,
            t_ref: None,
            bin_axes: None,
            bin_width: [None; 3],
            bin_max: [None; 3],
            signed: false,
            pairing: PairingPlan::Consecutive,
            normalization: Normalization::PerShot,
            fit_sign: SignHint::Auto,
            shots: 1000,
            seed: 1,
            threads: 0,
            output_dir: std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        }
    }
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}`"))
}

fn positive(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive, got `{v}`"))
    }
}

fn non_negative(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(v)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be non-negative, got `{v}`"))
    }
}

fn optional(v: &str) -> std::result::Result<Option<f64>, String> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        positive(v).map(Some)
    }
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn axis_list(v: &str) -> std::result::Result<Vec<Axis>, String> {
    let mut out = Vec::new();
    for part in v.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()) {
        let a = Axis::parse(part).ok_or_else(|| format!("unknown axis `{part}`"))?;
        if out.contains(&a) {
            return Err(format!("axis `{part}` repeated"));
        }
        out.push(a);
    }
    if out.is_empty() {
        return Err("need at least one axis".into());
    }
    out.sort_by_key(|a| a.index());
    Ok(out)
}

fn axis_names(axes: &[Axis]) -> String {
    axes.iter().map(|a| a.name()).collect::<Vec<_>>().join(",")
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| format!("{x:e}"))
}

fn axis_key(key: &str, prefix: &str) -> Option<usize> {
    let rest = key.strip_prefix(prefix)?;
    ["x", "y", "z"].iter().position(|a| *a == rest)
}

impl RunConfig {
    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected `key = value`", i + 1));
                continue;
            };
            if let Err(e) = cfg.set(key.trim(), value.trim()) {
                errors.push(format!("line {}: {}: {e}", i + 1, key.trim()));
            }
        }
        if !errors.is_empty() {
            return Err(LabError::Config(errors));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| match e {
            LabError::Config(list) => {
                LabError::Config(list.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
            }
            other => other,
        })
    }

    /// Sets one key. Values are parsed but cross-key checks wait for
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        if let Some(a) = axis_key(key, "source.size_") {
            self.size[a] = non_negative(v)?;
            return Ok(());
        }
        if let Some(a) = axis_key(key, "grid.pitch_") {
            self.pitch[a] = optional(v)?;
            return Ok(());
        }
        if let Some(a) = axis_key(key, "detector.resolution_") {
            self.resolution[a] = non_negative(v)?;
            return Ok(());
        }
        if let Some(a) = axis_key(key, "binning.width_") {
            self.bin_width[a] = optional(v)?;
            return Ok(());
        }
        if let Some(a) = axis_key(key, "binning.max_") {
            self.bin_max[a] = optional(v)?;
            return Ok(());
        }
        match key {
            "source.statistics" => self.statistics = v.parse().map_err(|e| format!("{e}"))?,
            "source.mode" => {
                self.mode = match v.to_ascii_lowercase().as_str() {
                    "atom" | "atoms" => Mode::Atom,
                    "photon" | "photons" | "light" => Mode::Photon,
                    _ => return Err(format!("expected atom or photon, got `{v}`")),
                }
            }
            "source.mass" => {
                self.mass = match v.to_ascii_lowercase().as_str() {
                    "helium4" | "he4" => HELIUM4_MASS,
                    "helium3" | "he3" => HELIUM3_MASS,
                    _ => positive(v)?,
                }
            }
            "source.flight_time" => self.flight_time = positive(v)?,
            "source.wavelength" => self.wavelength = positive(v)?,
            "source.distance" => self.distance = positive(v)?,
            "source.profile" => {
                self.profile = match v.to_ascii_lowercase().as_str() {
                    "gaussian" => ProfileKind::Gaussian,
                    "uniform" => ProfileKind::Uniform,
                    "pair" => ProfileKind::Pair,
                    "point" => ProfileKind::Point,
                    _ => return Err(format!("expected gaussian, uniform, pair or point, got `{v}`")),
                }
            }
            "source.emitters" => {
                self.emitters = if v.eq_ignore_ascii_case("auto") { None } else { Some(num(v)?) }
            }
            "source.mean_count" => self.mean_count = positive(v)?,
            "grid.dims" => self.dims = axis_list(v)?,
            "grid.points" => self.points = num(v)?,
            "grid.pitch_fraction" => self.pitch_fraction = positive(v)?,
            "detector.aperture_radius" => self.aperture_radius = positive(v)?,
            "detector.efficiency" => self.efficiency = non_negative(v)?,
            "detector.v_ref" => self.v_ref = optional(v)?,
            "detector.t_ref" => {
                self.t_ref = if v.eq_ignore_ascii_case("auto") { None } else { Some(non_negative(v)?) }
            }
            "binning.axes" => {
                self.bin_axes = if v.eq_ignore_ascii_case("auto") { None } else { Some(axis_list(v)?) }
            }
            "binning.signed" => self.signed = boolean(v)?,
            "binning.pairing" => {
                self.pairing = match v.to_ascii_lowercase().as_str() {
                    "consecutive" => PairingPlan::Consecutive,
                    "all" | "all_pairs" => PairingPlan::AllPairs,
                    _ => return Err(format!("expected consecutive or all, got `{v}`")),
                }
            }
            "binning.normalization" => {
                self.normalization =
                    Normalization::parse(v).ok_or_else(|| format!("expected per_shot or pair_totals, got `{v}`"))?
            }
            "fit.sign" => self.fit_sign = SignHint::parse(v).ok_or_else(|| format!("expected auto, + or -, got `{v}`"))?,
            "run.shots" => self.shots = num(v)?,
            "run.seed" => self.seed = num(v)?,
            "run.threads" => self.threads = num(v)?,
            "run.output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Checks that the configuration describes a buildable run.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.points == 0 {
            errors.push("grid.points: must be at least 1".to_string());
        }
        if self.emitters.is_some_and(|n| n < 2) && matches!(self.profile, ProfileKind::Gaussian | ProfileKind::Uniform) {
            errors.push("source.emitters: need at least 2".to_string());
        }
        if self.efficiency > 1.0 {
            errors.push("detector.efficiency: must be at most 1".to_string());
        }
        for &a in &self.dims {
            let i = a.index();
            if self.profile != ProfileKind::Point && !(self.size[i] > 0.0) {
                errors.push(format!("source.size_{}: must be positive for a {} profile", a.name(), self.profile.name()));
            }
            if self.profile == ProfileKind::Point && self.pitch[i].is_none() {
                errors.push(format!("grid.pitch_{}: required for a point source", a.name()));
            }
        }
        if let Some(axes) = &self.bin_axes {
            for a in axes {
                if !self.dims.contains(a) && self.resolution[a.index()] == 0.0 {
                    errors.push(format!(
                        "binning.axes: axis {} is neither simulated nor blurred, all separations would be zero",
                        a.name()
                    ));
                }
            }
        }
        if let Err(e) = self.detector().validate() {
            errors.push(format!("detector: {e}"));
        }
        if !errors.is_empty() {
            return Err(LabError::Config(errors));
        }
        self.binning()?;
        Ok(())
    }

    pub fn propagation(&self) -> Propagation {
        match self.mode {
            Mode::Atom => Propagation::Atom { mass: self.mass, flight_time: self.flight_time },
            Mode::Photon => Propagation::Photon { wavelength: self.wavelength, distance: self.distance },
        }
    }

    fn profile_with(&self, axis: usize, count: usize) -> Result<EmitterProfile> {
        let s = self.size[axis];
        Ok(match self.profile {
            ProfileKind::Gaussian => EmitterProfile::gaussian(s, count)?,
            ProfileKind::Uniform => EmitterProfile::uniform(s, count)?,
            ProfileKind::Pair => EmitterProfile::pair(s)?,
            ProfileKind::Point => EmitterProfile::point(),
        })
    }

    fn axis_profile(&self, axis: usize) -> Result<EmitterProfile> {
        self.profile_with(axis, self.emitter_count(axis))
    }

    /// Emitters along `axis`. A discrete emitter set of spacing `δ` makes Γ
    /// periodic with period `2π / (κ δ)`; the automatic count keeps that
    /// period beyond twice the grid extent, and never below
    /// [`MIN_EMITTERS`].
    pub fn emitter_count(&self, axis: usize) -> usize {
        if let Some(n) = self.emitters {
            return n;
        }
        let span = match self.profile {
            ProfileKind::Gaussian => 12.0 * self.size[axis],
            ProfileKind::Uniform => self.size[axis],
            ProfileKind::Pair | ProfileKind::Point => return MIN_EMITTERS,
        };
        let nominal = self
            .profile_with(axis, MIN_EMITTERS)
            .map(|p| self.propagation().correlation_length(p.rms()))
            .unwrap_or(f64::NAN);
        let pitch = self.pitch[axis].unwrap_or(self.pitch_fraction * nominal);
        let extent = self.points as f64 * pitch;
        let steps = (2.0 * extent * self.propagation().phase_rate() * span / core::f64::consts::TAU).ceil();
        if !steps.is_finite() {
            return MIN_EMITTERS;
        }
        let n = match self.profile {
            ProfileKind::Gaussian => steps as usize + 1,
            _ => steps as usize,
        };
        n.max(MIN_EMITTERS)
    }

    pub fn source_spec(&self) -> Result<SourceSpec> {
        Ok(SourceSpec {
            statistics: self.statistics,
            propagation: self.propagation(),
            profiles: self.dims.iter().map(|a| self.axis_profile(a.index())).collect::<Result<_>>()?,
            mean_count: self.mean_count,
        })
    }

    /// Ideal correlation length per detector axis, `1/(κ s)` with `s` the
    /// RMS source size; infinite for a point source.
    pub fn expected_lengths(&self) -> [f64; 3] {
        let mut out = [f64::INFINITY; 3];
        for (i, l) in out.iter_mut().enumerate() {
            if let Ok(p) = self.axis_profile(i) {
                let s = p.rms();
                if s > 0.0 {
                    *l = self.propagation().correlation_length(s);
                }
            }
        }
        out
    }

    /// Default clock: free fall for atoms, speed of light for photons.
    pub fn clock(&self) -> ArrivalClock {
        let (t, v) = match self.mode {
            Mode::Atom => (self.flight_time, G_EARTH * self.flight_time),
            Mode::Photon => (self.distance / SPEED_OF_LIGHT, SPEED_OF_LIGHT),
        };
        ArrivalClock::new(self.t_ref.unwrap_or(t), self.v_ref.unwrap_or(v))
    }

    /// Grid pitch: explicit, or `pitch_fraction` of the expected length.
    pub fn grid_pitch(&self, axis: usize) -> f64 {
        self.pitch[axis].unwrap_or_else(|| self.pitch_fraction * self.expected_lengths()[axis])
    }

    pub fn grid(&self) -> Result<Grid> {
        let axes = self
            .dims
            .iter()
            .map(|a| AxisGrid::centered(self.points, self.grid_pitch(a.index())))
            .collect::<hbt_core::Result<Vec<_>>>()?;
        Ok(Grid::new(axes, self.clock())?)
    }

    pub fn detector(&self) -> DetectorSpec {
        DetectorSpec {
            aperture_radius: self.aperture_radius,
            resolution: self.resolution,
            efficiency: self.efficiency,
            clock: self.clock(),
        }
    }

    pub fn binned_axes(&self) -> Vec<Axis> {
        self.bin_axes.clone().unwrap_or_else(|| self.dims.clone())
    }

    /// Bin width along `axis`: explicit, or a quarter of the smaller of the
    /// expected length and the resolution. Without either, two grid pitches.
    pub fn bin_width(&self, axis: usize) -> f64 {
        if let Some(w) = self.bin_width[axis] {
            return w;
        }
        let l = self.expected_lengths()[axis];
        let d = self.resolution[axis];
        let scale = match (l.is_finite(), d > 0.0) {
            (true, true) => l.min(d),
            (true, false) => l,
            (false, true) => d,
            (false, false) => return 2.0 * self.grid_pitch(axis),
        };
        scale / 4.0
    }

    /// Largest binned separation: explicit, or ten expected lengths (half
    /// the grid extent for a point source).
    pub fn bin_max(&self, axis: usize) -> f64 {
        if let Some(m) = self.bin_max[axis] {
            return m;
        }
        let l = self.expected_lengths()[axis];
        if l.is_finite() {
            10.0 * l
        } else {
            0.5 * self.points as f64 * self.grid_pitch(axis)
        }
    }

    pub fn binning(&self) -> Result<BinningSpec> {
        let axes = self
            .binned_axes()
            .into_iter()
            .map(|a| BinAxis { axis: a, width: self.bin_width(a.index()), max_separation: self.bin_max(a.index()) })
            .collect();
        Ok(BinningSpec::new(axes, self.signed)?)
    }

    /// Every key with its effective value, in a fixed order. Parsing the
    /// output reproduces this configuration.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: &dyn Display| out.push((k.to_string(), v.to_string()));
        put("source.statistics", &self.statistics);
        put("source.mode", &if self.mode == Mode::Atom { "atom" } else { "photon" });
        put("source.mass", &format!("{:e}", self.mass));
        put("source.flight_time", &format!("{:e}", self.flight_time));
        put("source.wavelength", &format!("{:e}", self.wavelength));
        put("source.distance", &format!("{:e}", self.distance));
        put("source.profile", &self.profile.name());
        for (i, a) in AXES.iter().enumerate() {
            put(&format!("source.size_{}", a.name()), &format!("{:e}", self.size[i]));
        }
        put("source.emitters", &self.emitters.map_or_else(|| "auto".to_string(), |n| n.to_string()));
        put("source.mean_count", &format!("{:e}", self.mean_count));
        put("grid.dims", &axis_names(&self.dims));
        put("grid.points", &self.points);
        put("grid.pitch_fraction", &format!("{:e}", self.pitch_fraction));
        for (i, a) in AXES.iter().enumerate() {
            put(&format!("grid.pitch_{}", a.name()), &show(self.pitch[i]));
        }
        put("detector.aperture_radius", &format!("{:e}", self.aperture_radius));
        for (i, a) in AXES.iter().enumerate() {
            put(&format!("detector.resolution_{}", a.name()), &format!("{:e}", self.resolution[i]));
        }
        put("detector.efficiency", &format!("{:e}", self.efficiency));
        put("detector.v_ref", &show(self.v_ref));
        put("detector.t_ref", &self.t_ref.map_or_else(|| "auto".to_string(), |x| format!("{x:e}")));
        put("binning.axes", &self.bin_axes.as_ref().map_or_else(|| "auto".to_string(), |a| axis_names(a)));
        for (i, a) in AXES.iter().enumerate() {
            put(&format!("binning.width_{}", a.name()), &show(self.bin_width[i]));
        }
        for (i, a) in AXES.iter().enumerate() {
            put(&format!("binning.max_{}", a.name()), &show(self.bin_max[i]));
        }
        put("binning.signed", &self.signed);
        put("binning.pairing", &if self.pairing == PairingPlan::Consecutive { "consecutive" } else { "all" });
        put("binning.normalization", &self.normalization.name());
        put(
            "fit.sign",
            &match self.fit_sign {
                SignHint::Auto => "auto",
                SignHint::Plus => "+",
                SignHint::Minus => "-",
            },
        );
        put("run.shots", &self.shots);
        put("run.seed", &self.seed);
        put("run.threads", &self.threads);
        put("run.output_dir", &self.output_dir.display());
        out
    }

    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
