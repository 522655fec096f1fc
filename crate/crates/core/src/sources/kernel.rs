#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::grid::{AxisGrid, Grid};
use super::{EmitterProfile, SourceSpec};
use crate::model::Statistics;
use crate::{Error, Result};

/// Modes whose eigenvalue is below this fraction of the largest one are
/// dropped from sampling. Their total contribution to the covariance is
/// below the numerical noise of the eigensolver.
pub const MODE_CUTOFF: f64 = 1e-12;

/// Eigenvalues down to `-PSD_TOLERANCE · λ_max` are treated as rounding noise
/// and clamped to zero; anything more negative is an error.
const PSD_TOLERANCE: f64 = 1e-10;

/// Coherence along one grid axis with its eigendecomposition.
///
/// `gamma` is normalized so that the diagonal is one for an emitter source.
/// Eigenvalues are sorted in descending order; `modes[i * n + k]` is the value
/// of eigenmode `k` at grid cell `i`.
#[derive(Clone, Debug)]
pub struct AxisKernel {
    grid: AxisGrid,
    gamma: Vec<Complex64>,
    eigenvalues: Vec<f64>,
    modes: Vec<Complex64>,
    kept: usize,
    mode_peak: Vec<f64>,
}

impl AxisKernel {
    /// Far-field coherence of a set of randomly phased emitters,
    /// `Γ(x₁, x₂) = Σⱼ wⱼ exp(i κ uⱼ (x₁ − x₂))`.
    pub fn from_profile(profile: &EmitterProfile, phase_rate: f64, grid: AxisGrid) -> Result<Self> {
        let n = grid.len;
        // Γ depends only on i - j on a regular grid.
        let lag = |m: isize| -> Complex64 {
            let dx = m as f64 * grid.pitch;
            profile
                .emitters()
                .iter()
                .map(|e| Complex64::from_polar(e.weight, phase_rate * e.position * dx))
                .sum()
        };
        let lags: Vec<Complex64> = (-(n as isize - 1)..n as isize).map(lag).collect();
        let mut gamma = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                gamma.push(lags[i + n - 1 - j]);
            }
        }
        AxisKernel::from_matrix(grid, gamma)
    }

    /// Eigendecomposes a Hermitian coherence matrix given row-major.
    pub fn from_matrix(grid: AxisGrid, gamma: Vec<Complex64>) -> Result<Self> {
        let n = grid.len;
        if gamma.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "coherence matrix has {} entries, grid needs {}",
                gamma.len(),
                n * n
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| gamma[i * n + j]);
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let max = eig.eigenvalues[order[0]];
        let min = eig.eigenvalues[order[n - 1]];
        if !(max > 0.0) || min < -PSD_TOLERANCE * max {
            return Err(Error::NotPositiveSemidefinite { min, max });
        }
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let mut modes = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for (col, &k) in order.iter().enumerate() {
            for i in 0..n {
                modes[i * n + col] = eig.eigenvectors[(i, k)];
            }
        }
        let kept = eigenvalues.iter().filter(|&&l| l > MODE_CUTOFF * max).count();
        let mode_peak = (0..n)
            .map(|k| (0..n).map(|i| modes[i * n + k].norm_sqr()).fold(0.0, f64::max))
            .collect();
        Ok(AxisKernel { grid, gamma, eigenvalues, modes, kept, mode_peak })
    }

    pub fn grid(&self) -> &AxisGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn gamma(&self, i: usize, j: usize) -> Complex64 {
        self.gamma[i * self.grid.len + j]
    }

    /// All eigenvalues, descending, negatives clamped to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of leading modes above [`MODE_CUTOFF`].
    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn mode_value(&self, i: usize, k: usize) -> Complex64 {
        self.modes[i * self.grid.len + k]
    }

    /// Row-major `n × n` eigenvector storage.
    pub fn mode_matrix(&self) -> &[Complex64] {
        &self.modes
    }

    /// `max_i |φ_k(i)|²`.
    pub fn mode_peak(&self, k: usize) -> f64 {
        self.mode_peak[k]
    }

    /// `Σ_k λ_k φ_k(i) φ_k(j)*` over every mode.
    pub fn reconstruct(&self, i: usize, j: usize) -> Complex64 {
        (0..self.grid.len)
            .map(|k| self.mode_value(i, k) * self.mode_value(j, k).conj() * self.eigenvalues[k])
            .sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.grid.len).map(|i| self.gamma(i, i).re).sum()
    }
}

/// One eigenmode of the product kernel: a tensor product of axis modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductMode {
    /// Axis mode index per axis (unused axes are 0).
    pub indices: [usize; 3],
    /// Eigenvalue including the kernel scale.
    pub eigenvalue: f64,
}

/// First-order coherence `C(p₁, p₂)` on a product grid.
///
/// The source is a product of per-axis emitter distributions, so the kernel
/// factorizes as `C = scale · Γ_x ⊗ Γ_y ⊗ Γ_z` and so does its
/// eigendecomposition. The full matrix is never materialized.
///
/// `scale` fixes the absolute normalization: the mean number of particles
/// in cell `i` is `C(i, i)`, and for fermions the eigenvalues of `C` are mode
/// occupations.
#[derive(Clone, Debug)]
pub struct CoherenceKernel {
    grid: Grid,
    axes: Vec<AxisKernel>,
    scale: f64,
}

impl CoherenceKernel {
    pub fn from_axes(grid: Grid, axes: Vec<AxisKernel>) -> Result<Self> {
        if axes.len() != grid.dims() || axes.iter().zip(grid.axes()).any(|(k, g)| k.grid() != g) {
            return Err(Error::ShapeMismatch("axis kernels do not match the grid".into()));
        }
        Ok(CoherenceKernel { grid, axes, scale: 1.0 })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axes(&self) -> &[AxisKernel] {
        &self.axes
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Unscaled coherence between flat grid points.
    pub fn gamma(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.grid.unravel(i), self.grid.unravel(j));
        self.axes
            .iter()
            .enumerate()
            .fold(Complex64::new(1.0, 0.0), |acc, (d, k)| acc * k.gamma(a[d], b[d]))
    }

    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.gamma(i, j) * self.scale
    }

    /// Normalized coherence `C(i,j)/√(C(i,i) C(j,j))`.
    pub fn g1(&self, i: usize, j: usize) -> Complex64 {
        let norm = (self.gamma(i, i).re * self.gamma(j, j).re).sqrt();
        self.gamma(i, j) / norm
    }

    pub fn mean_density(&self, i: usize) -> f64 {
        self.scale * self.gamma(i, i).re
    }

    /// Expected total detections, `tr C`.
    pub fn trace(&self) -> f64 {
        self.scale * self.axes.iter().map(AxisKernel::trace).product::<f64>()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.scale * self.axes.iter().map(|k| k.eigenvalues()[0]).product::<f64>()
    }

    /// Product modes above the cutoff, row-major over axis mode indices.
    pub fn product_modes(&self) -> Vec<ProductMode> {
        let kept: Vec<usize> = self.axes.iter().map(AxisKernel::kept).collect();
        let total: usize = kept.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut flat in 0..total {
            let mut indices = [0usize; 3];
            for d in (0..kept.len()).rev() {
                indices[d] = flat % kept[d];
                flat /= kept[d];
            }
            let eigenvalue = self
                .axes
                .iter()
                .enumerate()
                .fold(self.scale, |acc, (d, k)| acc * k.eigenvalues()[indices[d]]);
            out.push(ProductMode { indices, eigenvalue });
        }
        out
    }

    /// Eigenvalues of the scaled kernel above the cutoff, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.product_modes().iter().map(|m| m.eigenvalue).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn mode_count(&self) -> usize {
        self.axes.iter().map(AxisKernel::kept).product()
    }

    pub fn is_single_mode(&self) -> bool {
        self.mode_count() == 1
    }

    /// Value of a product mode at a flat grid point.
    pub fn mode_value(&self, mode: &[usize; 3], flat: usize) -> Complex64 {
        let idx = self.grid.unravel(flat);
        self.axes
            .iter()
            .enumerate()
            .fold(Complex64::new(1.0, 0.0), |acc, (d, k)| acc * k.mode_value(idx[d], mode[d]))
    }

    /// The most occupied mode on the grid, unit norm.
    pub fn dominant_mode(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.mode_value(&[0, 0, 0], i)).collect()
    }

    /// `Σ_k λ_k φ_k(i) φ_k(j)*` over all modes, scaled.
    pub fn reconstruct(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.grid.unravel(i), self.grid.unravel(j));
        self.axes
            .iter()
            .enumerate()
            .fold(Complex64::new(self.scale, 0.0), |acc, (d, k)| acc * k.reconstruct(a[d], b[d]))
    }
}

/// Builds the coherence kernel of `spec` on `grid` and eigendecomposes it.
///
/// The kernel scale is set from `spec.mean_count` so that `tr C` equals the
/// requested mean count. For fermions the scale is additionally capped so
/// that no mode occupation exceeds one; the achieved mean count is then
/// `kernel.trace()`.
pub fn build_source_kernel(spec: &SourceSpec, grid: &Grid) -> Result<CoherenceKernel> {
    spec.validate()?;
    if spec.profiles.len() != grid.dims() {
        return Err(Error::ShapeMismatch(format!(
            "source has {} axes, grid has {}",
            spec.profiles.len(),
            grid.dims()
        )));
    }
    let rate = spec.propagation.phase_rate();
    let axes = spec
        .profiles
        .iter()
        .zip(grid.axes())
        .map(|(p, g)| AxisKernel::from_profile(p, rate, *g))
        .collect::<Result<Vec<_>>>()?;
    let kernel = CoherenceKernel::from_axes(grid.clone(), axes)?;

    let unit_trace = kernel.trace();
    let mut scale = spec.mean_count / unit_trace;
    if spec.statistics == Statistics::Fermion {
        let cap = 1.0 / kernel.max_eigenvalue();
        if scale > cap {
            log::warn!(
                "fermion mean count {} exceeds the Pauli bound {} on this grid; occupations capped at 1",
                spec.mean_count,
                cap * unit_trace
            );
            scale = cap;
        }
    }
    if kernel.is_single_mode() {
        log::warn!("single-mode source: the field is fully coherent over the grid");
    }
    Ok(kernel.with_scale(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArrivalClock;
    use crate::sources::{Emitter, Propagation};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn photon() -> Propagation {
        Propagation::Photon { wavelength: 500e-9, distance: 1.0 }
    }

    fn kernel_1d(profile: EmitterProfile, n: usize, pitch: f64) -> CoherenceKernel {
        let grid = Grid::new(
            alloc::vec![AxisGrid::centered(n, pitch).unwrap()],
            ArrivalClock::new(0.0, 1.0),
        )
        .unwrap();
        let spec = SourceSpec {
            statistics: Statistics::Boson,
            propagation: photon(),
            profiles: alloc::vec![profile],
            mean_count: 10.0,
        };
        build_source_kernel(&spec, &grid).unwrap()
    }

    #[test]
    fn point_source_is_fully_coherent() {
        let k = kernel_1d(EmitterProfile::point(), 16, 1e-5);
        assert!(k.is_single_mode());
        for i in 0..16 {
            for j in 0..16 {
                assert!((k.g1(i, j).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_emitters_give_cosine_fringe() {
        // emitters at ±d/2: |g1(Δ)| = |cos(π d Δ / (λ L))|, first zero at λL/(2d)
        let d = 1e-3;
        let zero = 500e-9 * 1.0 / (2.0 * d);
        let pitch = zero / 10.0;
        let k = kernel_1d(EmitterProfile::pair(d).unwrap(), 41, pitch);
        for j in 0..41 {
            let delta = (j as f64) * pitch;
            let expected = (PI * d * delta / 500e-9).cos();
            assert!((k.g1(j, 0).re - expected).abs() < 1e-12, "j={j}");
            assert!(k.g1(j, 0).im.abs() < 1e-12);
        }
        assert!(k.g1(10, 0).norm() < 1e-12);
        assert!(k.g1(20, 0).norm() > 0.999);
    }

    #[test]
    fn gaussian_source_decay_length() {
        // |g1|² falls to 1/e at the correlation length λL/(2πs)
        let s = 1e-3;
        let profile = EmitterProfile::gaussian(s, 101).unwrap();
        let l = 500e-9 / (2.0 * PI * profile.rms());
        let pitch = l / 16.0;
        let k = kernel_1d(profile, 64, pitch);
        let mut crossing = None;
        for j in 1..64 {
            let (a, b) = (k.g1(j - 1, 0).norm_sqr(), k.g1(j, 0).norm_sqr());
            let target = (-1.0f64).exp();
            if a >= target && b < target {
                let frac = (a - target) / (a - b);
                crossing = Some((j as f64 - 1.0 + frac) * pitch);
                break;
            }
        }
        let measured = crossing.expect("no 1/e crossing");
        assert!((measured / l - 1.0).abs() < 0.05, "measured {measured}, expected {l}");
    }

    #[test]
    fn eigen_reconstruction_and_trace() {
        let k = kernel_1d(EmitterProfile::gaussian(1e-3, 51).unwrap(), 32, 1e-5);
        for i in 0..32 {
            for j in 0..32 {
                assert!((k.reconstruct(i, j) - k.coherence(i, j)).norm() < 1e-10 * k.scale() * 32.0);
            }
        }
        let sum: f64 = k.axes()[0].eigenvalues().iter().sum();
        assert!((sum - 32.0).abs() < 1e-9);
        assert!((k.trace() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn fermion_scale_is_capped() {
        let grid = Grid::new(
            alloc::vec![AxisGrid::centered(32, 1e-5).unwrap()],
            ArrivalClock::new(0.0, 1.0),
        )
        .unwrap();
        let spec = SourceSpec {
            statistics: Statistics::Fermion,
            propagation: photon(),
            profiles: alloc::vec![EmitterProfile::point()],
            mean_count: 5.0,
        };
        let k = build_source_kernel(&spec, &grid).unwrap();
        assert!((k.max_eigenvalue() - 1.0).abs() < 1e-12);
        assert!((k.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_psd_matrix() {
        let grid = AxisGrid::centered(2, 1.0).unwrap();
        let gamma = alloc::vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(
            AxisKernel::from_matrix(grid, gamma),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn product_kernel_factorizes() {
        let grid = Grid::new(
            alloc::vec![AxisGrid::centered(6, 2e-5).unwrap(), AxisGrid::centered(5, 3e-5).unwrap()],
            ArrivalClock::new(0.0, 1.0),
        )
        .unwrap();
        let spec = SourceSpec {
            statistics: Statistics::Boson,
            propagation: photon(),
            profiles: alloc::vec![
                EmitterProfile::gaussian(1e-3, 31).unwrap(),
                EmitterProfile::uniform(2e-3, 7).unwrap()
            ],
            mean_count: 3.0,
        };
        let k = build_source_kernel(&spec, &grid).unwrap();
        let total: f64 = k.product_modes().iter().map(|m| m.eigenvalue).sum();
        assert!((total - 3.0).abs() < 1e-6);
        for i in 0..k.len() {
            for j in 0..k.len() {
                assert!((k.reconstruct(i, j) - k.coherence(i, j)).norm() < 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn kernel_is_hermitian_psd(
            emitters in proptest::collection::vec((-2e-3f64..2e-3, 0.05f64..1.0), 1..12),
            n in 2usize..24,
            pitch in 1e-6f64..1e-4,
        ) {
            let profile = EmitterProfile::normalized(
                emitters.into_iter().map(|(position, weight)| Emitter { position, weight }).collect()
            ).unwrap();
            let k = kernel_1d(profile, n, pitch);
            for i in 0..n {
                prop_assert!((k.gamma(i, i).re - 1.0).abs() < 1e-12);
                prop_assert!(k.gamma(i, i).im.abs() < 1e-12);
                for j in 0..n {
                    prop_assert!((k.gamma(i, j) - k.gamma(j, i).conj()).norm() < 1e-12);
                    prop_assert!(k.g1(i, j).norm() <= 1.0 + 1e-12);
                }
            }
            prop_assert!(k.axes()[0].eigenvalues().iter().all(|&l| l >= 0.0));
        }
    }
}
