//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run everything with `cargo test --release -p hbt-lab --test acceptance`,
//! or pass criterion names (`c1 c4 ...`) to run a subset.

use std::ops::Range;
use std::time::Instant;

use hbt_core::correlator::{
    cross_shot_histogram, pair_histogram, Axis, BinAxis, BinningSpec, CountStatistics, PairingPlan, Point,
};
use hbt_core::model::constants::HELIUM4_MASS;
use hbt_core::oracles::{
    analytic_g2, effective_mode_count, region_count_moments, two_particle_probability, AmplitudePair,
};
use hbt_core::sources::{build_source_kernel, AxisGrid, CoherenceKernel, Emitter, EmitterProfile, Grid, Propagation, SourceSpec};
use hbt_core::{ArrivalClock, RngStream, Shot, Statistics};
use hbt_lab::events::write_events_to;
use hbt_lab::pipeline::{self, correlate, fit, simulate, simulate_shot};
use hbt_lab::report::{correlation_table, Predictions};
use hbt_lab::RunConfig;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

const IDEAL: &str = "detector.resolution_x = 0\ndetector.resolution_y = 0\ndetector.resolution_z = 0\n";

/// Fermion grid wide enough to hold ~200 particles under the Pauli bound.
const WIDE: &str = "grid.points = 192\ngrid.pitch_fraction = 0.25\n";

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn config(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap_or_else(|e| panic!("bad config: {e}\n{text}"))
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

/// g2 of the bin containing zero separation.
fn origin_g2(cfg: &RunConfig, shots: &[Shot]) -> (f64, f64, hbt_core::correlator::FitResult) {
    let corr = correlate(shots, cfg, 0).unwrap();
    let b = corr.function.binning.origin_bin();
    let f = fit(&corr.function, cfg).unwrap();
    (corr.function.g2[b], corr.function.stderr[b], f)
}

fn c1_boson_bunching() -> Outcome {
    let cfg = config(&format!("source.statistics = boson\nsource.mean_count = 200\nrun.shots = 10000\n{IDEAL}"));
    let sim = simulate(&cfg, 0).unwrap();
    let (g0, g0_err, f) = origin_g2(&cfg, &sim.shots);
    let pass = f.sign == 1 && within(f.eta, 1.0, 0.05) && within(1.0 + f.eta, 2.0, 0.05);
    Outcome::new(
        pass,
        format!(
            "eta={:.4}±{:.4} sign={:+} fitted g2(0)={:.4} origin bin g2={:.4}±{:.4} chi2red={:.2}",
            f.eta, f.eta_err, f.sign, 1.0 + f.eta, g0, g0_err, f.chi2red
        ),
    )
}

fn fermion_config(extra: &str) -> RunConfig {
    config(&format!(
        "source.statistics = fermion\nsource.mean_count = 200\n{WIDE}{extra}"
    ))
}

fn c2_fermion_antibunching() -> Outcome {
    let cfg = fermion_config(&format!("run.shots = 10000\n{IDEAL}"));
    let l = cfg.expected_lengths()[0];
    let width = cfg.bin_width(0).max(cfg.bin_width(1));
    let sim = simulate(&cfg, 0).unwrap();
    let per_shot = sim.shots.iter().map(Shot::len).sum::<usize>() as f64 / sim.shots.len() as f64;
    let (g0, g0_err, f) = origin_g2(&cfg, &sim.shots);
    let pass = width <= l / 4.0 * (1.0 + 1e-12) && g0 <= 0.10 && f.sign == -1 && within(f.eta, 1.0, 0.10);
    Outcome::new(
        pass,
        format!(
            "{per_shot:.1} events/shot bin={:.3}l origin bin g2={g0:.4}±{g0_err:.4} eta={:.4}±{:.4} sign={:+}",
            width / l,
            f.eta,
            f.eta_err,
            f.sign
        ),
    )
}

fn c3_coherent_flat() -> Outcome {
    let cfg = config(&format!(
        "source.statistics = coherent\nsource.mean_count = 200\ngrid.dims = x\nrun.shots = 10000\n{IDEAL}"
    ));
    let sim = simulate(&cfg, 0).unwrap();
    let cf = correlate(&sim.shots, &cfg, 0).unwrap().function;
    let (mut worst, mut at, mut worst_err, mut valid) = (0.0f64, 0.0, 0.0, 0);
    for i in (0..cf.len()).filter(|&i| cf.valid[i]) {
        valid += 1;
        let dev = (cf.g2[i] - 1.0).abs();
        if dev > worst {
            (worst, at, worst_err) = (dev, cf.center(i)[0], cf.stderr[i]);
        }
    }
    let pass = valid == cf.len() && worst <= 0.02;
    Outcome::new(
        pass,
        format!("{valid}/{} bins valid, max |g2-1|={worst:.4} (stderr {worst_err:.4}) at dx={at:.3e} m", cf.len()),
    )
}

fn c4_length_law() -> Outcome {
    let runs = [
        ("atom", "source.mode = atom", [8.815e-6, 17.63e-6, 35.26e-6]),
        ("photon", "source.mode = photon\nsource.wavelength = 500e-9\nsource.distance = 1", [0.5e-3, 1e-3, 2e-3]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mode, sizes) in runs {
        for s in sizes {
            let cfg = config(&format!(
                "{mode}\nsource.statistics = boson\nsource.mean_count = 200\nsource.size_x = {s}\nsource.size_y = {s}\n\
                 run.shots = 2000\n{IDEAL}"
            ));
            let want = match name {
                "atom" => hbt_core::oracles::correlation_length_atoms(cfg.mass, cfg.flight_time, s),
                _ => hbt_core::oracles::correlation_length_light(cfg.wavelength, cfg.distance, s),
            };
            let sim = simulate(&cfg, 0).unwrap();
            let f = fit(&correlate(&sim.shots, &cfg, 0).unwrap().function, &cfg).unwrap();
            let mut worst = 0.0f64;
            for l in [f.lengths[0], f.lengths[1]] {
                let r = l.map_or(f64::INFINITY, |l| l / want - 1.0);
                if r.abs() > worst.abs() {
                    worst = r;
                }
            }
            pass &= worst.abs() <= 0.10;
            parts.push(format!("{name} s={s:.3e} l={want:.3e} dev={:+.1}%", 100.0 * worst));
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn c5_blurred_contrast() -> Outcome {
    // Default detector: 0.5 mm transverse, 10 µm vertical resolution. Blur
    // smooths the kink of the window's pair autocorrelation at zero, which
    // inflates the measured amplitude by about 1 + 1.13 d / W per axis, so
    // the windows here are wide: 52 mm for bosons, 26 mm for fermions.
    let target = 1.0 / 15.0;
    let boson = config(
        "source.statistics = boson\nsource.mean_count = 10000\ngrid.points = 384\ngrid.pitch_fraction = 0.5\n\
         run.shots = 300\n",
    );
    let contrast = Predictions::new(&boson).contrast;
    let sim = simulate(&boson, 0).unwrap();
    let fb = fit(&correlate(&sim.shots, &boson, 0).unwrap().function, &boson).unwrap();
    drop(sim);
    let fermion = config(
        "source.statistics = fermion\nsource.mean_count = 200\ngrid.points = 192\ngrid.pitch_fraction = 0.5\n\
         run.shots = 4000\n",
    );
    let sim = simulate(&fermion, 0).unwrap();
    let ff = fit(&correlate(&sim.shots, &fermion, 0).unwrap().function, &fermion).unwrap();
    let ok = |eta: f64| (eta / target - 1.0).abs() <= 0.30;
    let pass = fb.sign == 1 && ok(fb.eta) && ff.sign == -1 && ok(ff.eta);
    Outcome::new(
        pass,
        format!(
            "predicted contrast {contrast:.4} (1/{:.1}); boson eta={:.4}±{:.4} sign={:+}; fermion eta={:.4}±{:.4} sign={:+}",
            1.0 / contrast,
            fb.eta,
            fb.eta_err,
            fb.sign,
            ff.eta,
            ff.eta_err,
            ff.sign
        ),
    )
}

/// Centered square boxes of `n` cells per axis.
fn centered_box(grid: &Grid, n: usize) -> Vec<Range<usize>> {
    grid.shape().iter().map(|&len| (len - n) / 2..(len - n) / 2 + n).collect()
}

/// All disjoint boxes of `n` cells per axis tiling the grid.
fn tiles(grid: &Grid, n: usize) -> Vec<Vec<Range<usize>>> {
    let mut out = vec![Vec::new()];
    for &len in &grid.shape() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..len / n).map(move |t| {
                    let mut b = prefix.clone();
                    b.push(t * n..(t + 1) * n);
                    b
                })
            })
            .collect();
    }
    out
}

/// Box sizes whose effective mode count is close to 1, 5 and 20: the largest
/// box within 5% of one mode, then the nearest in log for the others.
fn mode_boxes(kernel: &CoherenceKernel) -> Vec<(usize, f64)> {
    let grid = kernel.grid();
    let max = *grid.shape().iter().min().unwrap();
    let g: Vec<f64> = (1..=max).map(|n| effective_mode_count(kernel, &centered_box(grid, n)).unwrap()).collect();
    let single = (1..=max).filter(|&n| g[n - 1] <= 1.05).max().unwrap_or(1);
    let mut out = vec![(single, g[single - 1])];
    for target in [5.0f64, 20.0] {
        let n = (1..=max)
            .min_by(|&a, &b| (g[a - 1] / target).ln().abs().total_cmp(&(g[b - 1] / target).ln().abs()))
            .unwrap();
        out.push((n, g[n - 1]));
    }
    out
}

/// Detector-frame positions of the events of one shot that fall inside
/// each box, counted per box. Boxes follow cell edges, so cell jitter never
/// moves an event across a box boundary.
fn box_counts(grid: &Grid, shot: &Shot, boxes: &[Vec<Range<usize>>]) -> Vec<u64> {
    let axes = grid.axes();
    let cell = |e: &hbt_core::DetectionEvent| -> Vec<usize> {
        [e.x, e.y]
            .iter()
            .zip(axes)
            .map(|(&v, a)| ((v - a.lower_edge(0)) / a.pitch).floor() as usize)
            .collect()
    };
    let mut counts = vec![0u64; boxes.len()];
    for e in &shot.events {
        let c = cell(e);
        for (k, b) in boxes.iter().enumerate() {
            if b.iter().zip(&c).all(|(r, i)| r.contains(i)) {
                counts[k] += 1;
            }
        }
    }
    counts
}

/// Streams `shots` shots of `cfg` and returns the counts in each box, one
/// vector per box.
fn stream_counts(cfg: &RunConfig, kernel: &CoherenceKernel, boxes: &[Vec<Range<usize>>]) -> Vec<Vec<u64>> {
    let det = cfg.detector();
    let per_shot: Vec<Vec<u64>> = (0..cfg.shots)
        .into_par_iter()
        .map(|id| {
            let shot = simulate_shot(kernel, cfg.statistics, cfg.mean_count, &det, cfg.seed, id).unwrap();
            box_counts(kernel.grid(), &shot, boxes)
        })
        .collect();
    (0..boxes.len()).map(|k| per_shot.iter().map(|c| c[k]).collect()).collect()
}

fn c6_counting_statistics() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    let boson = config(&format!("source.statistics = boson\nsource.mean_count = 2000\nrun.shots = 10000\n{IDEAL}"));
    let kernel = pipeline::build_kernel(&boson).unwrap();
    let sizes = mode_boxes(&kernel);
    let boxes: Vec<_> = sizes.iter().map(|&(n, _)| centered_box(kernel.grid(), n)).collect();
    for ((&(n, g), b), counts) in sizes.iter().zip(&boxes).zip(stream_counts(&boson, &kernel, &boxes)) {
        let st = CountStatistics::from_counts(&counts);
        let (mean, exact_var) = region_count_moments(&kernel, b, Statistics::Boson).unwrap();
        let want = mean + mean * mean / g;
        let z = (st.variance - want) / st.variance_err;
        pass &= z.abs() <= 3.0 && (want / exact_var - 1.0).abs() < 1e-9;
        parts.push(format!(
            "boson {n}² cells g={g:.2}: <N>={:.3} var={:.3}±{:.3} want {want:.3} ({z:+.1}σ)",
            st.mean, st.variance, st.variance_err
        ));
    }

    // The fermion kernel is stationary, so every tile has the same mean and
    // mode count and all tiles of a shot are pooled.
    let fermion = config(&format!("source.statistics = fermion\nsource.mean_count = 40\nrun.shots = 10000\n{IDEAL}"));
    let kernel = pipeline::build_kernel(&fermion).unwrap();
    for (n, g) in mode_boxes(&kernel) {
        let t = tiles(kernel.grid(), n);
        let counts: Vec<u64> = stream_counts(&fermion, &kernel, &t).concat();
        let st = CountStatistics::from_counts(&counts);
        pass &= st.variance <= st.mean;
        parts.push(format!(
            "fermion {n}² cells g={g:.2} ({} tiles): <N>={:.4} var={:.4} var/mean={:.4}",
            t.len(),
            st.mean,
            st.variance,
            st.variance / st.mean
        ));
    }

    let coherent =
        config(&format!("source.statistics = coherent\nsource.mean_count = 20000\nrun.shots = 10000\n{IDEAL}"));
    let kernel = pipeline::build_kernel(&coherent).unwrap();
    let sizes = mode_boxes(&pipeline::build_kernel(&boson).unwrap());
    let boxes: Vec<_> = sizes.iter().map(|&(n, _)| centered_box(kernel.grid(), n)).collect();
    for (&(n, g), counts) in sizes.iter().zip(stream_counts(&coherent, &kernel, &boxes)) {
        let st = CountStatistics::from_counts(&counts);
        let ratio = st.variance / st.mean;
        pass &= within(ratio, 1.0, 0.05);
        parts.push(format!("coherent {n}² cells (boson g={g:.2}): <N>={:.1} var/mean={ratio:.4}", st.mean));
    }
    Outcome::new(pass, parts.join("\n       "))
}

/// Weighted sum of the two-particle probability over every ordered pair of
/// emitters of a product source, normalized by the distinguishable sum.
fn enumerated_g2(spec: &SourceSpec, grid: &Grid, i: usize, j: usize, stats: Statistics) -> f64 {
    let kappa = spec.propagation.phase_rate();
    let (x1, x2) = (grid.point(i), grid.point(j));
    let mut emitters: Vec<(f64, Vec<f64>)> = vec![(1.0, vec![])];
    for p in &spec.profiles {
        emitters = emitters
            .iter()
            .flat_map(|(w, u)| {
                p.emitters().iter().map(move |e| {
                    let mut u = u.clone();
                    u.push(e.position);
                    (w * e.weight, u)
                })
            })
            .collect();
    }
    let amp = |u: &[f64], x: &Point| Complex64::from_polar(1.0, kappa * u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
    let (mut num, mut den) = (0.0, 0.0);
    for (wa, ua) in &emitters {
        for (wb, ub) in &emitters {
            let amps = AmplitudePair::new(amp(ua, &x1), amp(ua, &x2), amp(ub, &x1), amp(ub, &x2));
            num += wa * wb * two_particle_probability(&amps, stats);
            den += wa * wb * two_particle_probability(&amps, Statistics::Distinguishable);
        }
    }
    num / den
}

fn c7_oracle_equivalence() -> Outcome {
    let mut rng = RngStream::new(7, 0).rng();
    let (mut worst, mut checks) = (0.0f64, 0usize);
    for case in 0..200 {
        let dims = 1 + case % 3;
        // at most 20 emitters in the product source
        let per_axis = match dims {
            1 => rng.random_range(1..=20),
            2 => rng.random_range(1..=4),
            _ => rng.random_range(1..=2),
        };
        let profiles: Vec<EmitterProfile> = (0..dims)
            .map(|_| {
                let e = (0..per_axis)
                    .map(|_| Emitter { position: rng.random_range(-30e-6..30e-6), weight: rng.random_range(0.05..1.0) })
                    .collect();
                EmitterProfile::normalized(e).unwrap()
            })
            .collect();
        let propagation = if case % 2 == 0 {
            Propagation::Atom { mass: HELIUM4_MASS, flight_time: 0.3 }
        } else {
            Propagation::Photon { wavelength: 500e-9, distance: 0.5 }
        };
        let axes: Vec<AxisGrid> = (0..dims).map(|_| AxisGrid::centered(6, 7e-5).unwrap()).collect();
        let grid = Grid::new(axes, ArrivalClock::free_fall(0.3)).unwrap();
        for stats in [Statistics::Boson, Statistics::Fermion, Statistics::Distinguishable] {
            let spec = SourceSpec { statistics: stats, propagation, profiles: profiles.clone(), mean_count: 1.0 };
            let kernel = build_source_kernel(&spec, &grid).unwrap();
            for _ in 0..8 {
                let (i, j) = (rng.random_range(0..grid.len()), rng.random_range(0..grid.len()));
                let want = enumerated_g2(&spec, &grid, i, j, stats);
                let got = analytic_g2(&kernel, i, j, stats);
                // exact fermion zeros only allow an absolute round-off floor
                let excess = ((got - want).abs() - 1e-14).max(0.0);
                worst = worst.max(excess / want.abs().max(f64::MIN_POSITIVE));
                checks += 1;
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("{checks} point pairs on 200 kernels, max relative error {worst:.2e}"))
}

/// Reference bin of a separation from the binning parameters alone.
fn brute_bin(axes: &[BinAxis], signed: bool, d: &Point) -> Option<usize> {
    let mut flat = 0usize;
    for a in axes {
        let h = (a.max_separation / a.width).ceil() as i64;
        let v = d[a.axis.index()];
        let (b, n) = if signed { ((v / a.width).floor() as i64 + h, 2 * h) } else { ((v.abs() / a.width).floor() as i64, h) };
        if b < 0 || b >= n {
            return None;
        }
        flat = flat * n as usize + b as usize;
    }
    Some(flat)
}

fn brute_add(counts: &mut [u64], axes: &[BinAxis], signed: bool, p: &Point, q: &Point) {
    let mut orientations = vec![[q[0] - p[0], q[1] - p[1], q[2] - p[2]]];
    if signed {
        orientations.push([p[0] - q[0], p[1] - q[1], p[2] - q[2]]);
    }
    for d in orientations {
        if let Some(b) = brute_bin(axes, signed, &d) {
            counts[b] += 1;
        }
    }
}

fn c8_exact_pairs() -> Outcome {
    let mut rng = RngStream::new(8, 0).rng();
    let mut failures = Vec::new();
    for case in 0..100 {
        let coord = |rng: &mut hbt_core::model::StreamRng| {
            // half the draws sit on a lattice commensurate with the widths
            if rng.random::<bool>() {
                rng.random_range(-40i32..40) as f64 * 0.125
            } else {
                rng.random_range(-5.0..5.0)
            }
        };
        let n_shots = rng.random_range(2..6);
        let shots: Vec<Vec<Point>> = (0..n_shots)
            .map(|_| {
                let n = rng.random_range(0..40);
                (0..n).map(|_| [coord(&mut rng), coord(&mut rng), coord(&mut rng)]).collect()
            })
            .collect();
        let mut axes = Vec::new();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            if axes.is_empty() && axis == Axis::Z || rng.random::<bool>() {
                let width = [0.25, 0.5, rng.random_range(0.1..1.0)][rng.random_range(0..3)];
                axes.push(BinAxis { axis, width, max_separation: width * rng.random_range(1.0..8.0) });
            }
        }
        let signed = rng.random::<bool>();
        let binning = BinningSpec::new(axes.clone(), signed).unwrap();

        let mut same = vec![0u64; binning.len()];
        for s in &shots {
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    brute_add(&mut same, &axes, signed, &s[i], &s[j]);
                }
            }
        }
        let mut cross = vec![0u64; binning.len()];
        let mut all = vec![0u64; binning.len()];
        for a in 0..shots.len() {
            for b in a + 1..shots.len() {
                for p in &shots[a] {
                    for q in &shots[b] {
                        if b == a + 1 {
                            brute_add(&mut cross, &axes, signed, p, q);
                        }
                        brute_add(&mut all, &axes, signed, p, q);
                    }
                }
            }
        }
        let fast_same = pair_histogram(&shots, &binning);
        let fast_cross = cross_shot_histogram(&shots, &binning, PairingPlan::Consecutive).unwrap();
        let fast_all = cross_shot_histogram(&shots, &binning, PairingPlan::AllPairs).unwrap();
        let pairs: u64 = shots.iter().map(|s| (s.len() * s.len().saturating_sub(1) / 2) as u64).sum();
        if fast_same.counts != same
            || fast_cross.counts != cross
            || fast_all.counts != all
            || fast_same.total_pairs != pairs * if signed { 2 } else { 1 }
        {
            failures.push(case);
        }
    }
    Outcome::new(failures.is_empty(), format!("100 instances, mismatches in {:?}", failures))
}

fn c9_determinism() -> Outcome {
    let cfg = config("source.statistics = boson\nsource.mean_count = 100\ngrid.points = 64\nrun.shots = 200\nrun.seed = 42\n");
    let files = |threads: usize| {
        let sim = simulate(&cfg, threads).unwrap();
        let mut events = Vec::new();
        write_events_to(&sim.shots, &mut events).unwrap();
        let table = correlation_table(&correlate(&sim.shots, &cfg, threads).unwrap().function);
        (events, table.into_bytes())
    };
    let first = files(1);
    let again = files(1);
    let wide = files(4);
    let fermion = fermion_config("grid.points = 64\nrun.shots = 50\nrun.seed = 42\n");
    let fermion_runs: Vec<Vec<Shot>> = [1, 4, 1].iter().map(|&t| simulate(&fermion, t).unwrap().shots).collect();
    let pass = first == again && first == wide && fermion_runs[0] == fermion_runs[1] && fermion_runs[0] == fermion_runs[2];
    Outcome::new(
        pass,
        format!(
            "events {} bytes, table {} bytes; repeat equal={} 4 workers equal={} fermion equal={}",
            first.0.len(),
            first.1.len(),
            first == again,
            first == wide,
            fermion_runs[0] == fermion_runs[1] && fermion_runs[0] == fermion_runs[2]
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("c1", "boson bunching amplitude", c1_boson_bunching),
    ("c2", "fermion antibunching", c2_fermion_antibunching),
    ("c3", "coherent source is flat", c3_coherent_flat),
    ("c4", "correlation length law", c4_length_law),
    ("c5", "resolution-limited contrast", c5_blurred_contrast),
    ("c6", "counting statistics", c6_counting_statistics),
    ("c7", "oracle equivalence", c7_oracle_equivalence),
    ("c8", "exact pair counting", c8_exact_pairs),
    ("c9", "determinism", c9_determinism),
];

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {id} {name} [{:.0} s]: {}", start.elapsed().as_secs_f64(), out.detail);
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
