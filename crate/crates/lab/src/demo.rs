//! One-dimensional pictures of bunching, independence and antibunching:
//! `n` particles on a line `n` correlation lengths long.

use hbt_core::model::constants::HELIUM4_MASS;
use hbt_core::sources::{
    build_source_kernel, sample_chaotic_field, sample_projection_events, AxisGrid, EmitterProfile,
    Grid, Propagation, SourceSpec,
};
use hbt_core::{ArrivalClock, RngStream, Statistics};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{LabError, Result};

/// Grid cells per correlation length.
const CELLS_PER_LENGTH: usize = 4;

/// Sorted positions of `n` particles on `[-n·length/2, n·length/2)`.
///
/// Bosons are drawn independently from the intensity of one chaotic field
/// realization, fermions from the projection process of the `n` most
/// occupied modes, distinguishable particles uniformly.
pub fn demo_box3(statistics: Statistics, n: usize, length: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(LabError::Usage(format!("need at least 2 particles, got {n}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(LabError::Usage(format!("length must be positive, got {length}")));
    }
    let cells = n * CELLS_PER_LENGTH;
    let axis = AxisGrid::centered(cells, length / CELLS_PER_LENGTH as f64)?;
    let mut rng = RngStream::source(seed, 0).rng();
    let mut xs: Vec<f64> = match statistics {
        Statistics::Distinguishable | Statistics::Coherent => {
            let (lo, w) = (axis.lower_edge(0), axis.extent());
            (0..n).map(|_| lo + w * rng.random::<f64>()).collect()
        }
        Statistics::Boson | Statistics::Fermion => {
            let propagation = Propagation::Atom { mass: HELIUM4_MASS, flight_time: 0.3 };
            let size = 1.0 / (propagation.phase_rate() * length);
            let spec = SourceSpec {
                statistics,
                propagation,
                profiles: vec![EmitterProfile::gaussian(size, 101)?],
                mean_count: n as f64,
            };
            let grid = Grid::new(vec![axis], ArrivalClock::free_fall(0.3))?;
            let kernel = build_source_kernel(&spec, &grid)?;
            if statistics == Statistics::Boson {
                let field = sample_chaotic_field(&kernel, &mut rng);
                let weights: Vec<f64> = field.iter().map(|e| e.norm_sqr()).collect();
                let index = WeightedIndex::new(&weights)
                    .map_err(|e| LabError::Core(hbt_core::Error::InvalidArgument(e.to_string())))?;
                (0..n)
                    .map(|_| {
                        let c = index.sample(&mut rng);
                        axis.lower_edge(c) + axis.pitch * rng.random::<f64>()
                    })
                    .collect()
            } else {
                let mut modes = kernel.product_modes();
                modes.sort_by(|a, b| b.eigenvalue.total_cmp(&a.eigenvalue));
                if modes.len() < n {
                    return Err(LabError::Core(hbt_core::Error::InvalidArgument(format!(
                        "only {} modes for {n} fermions",
                        modes.len()
                    ))));
                }
                let chosen: Vec<[usize; 3]> = modes[..n].iter().map(|m| m.indices).collect();
                sample_projection_events(&kernel, &chosen, &mut rng)?.points.iter().map(|p| p.x).collect()
            }
        }
    };
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

pub fn demo_table(statistics: Statistics, xs: &[f64]) -> String {
    let row: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
    format!("# statistics={statistics} n={}\n# x[m]\n{}\n", xs.len(), row.join(" "))
}
