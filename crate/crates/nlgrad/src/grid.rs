//! Periodic uniform grids, grid functions, discrete Fourier transforms,
//! `L^p` norms, and domain masks.
//!
//! The torus `[0, L)^n` is the discretization substrate for all operators in
//! this crate. Interactions of horizon `δ` are represented exactly on the
//! torus as long as `L > 4δ` and supported data stays at least `δ` away from
//! the box seam; mask construction enforces both conditions.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Uniform periodic grid on the box `[0, L)^dim` with `N` nodes per axis.
///
/// Nodes sit at coordinates `i·h` with spacing `h = L/N`; the discrete
/// frequency set is `{k/L : k = −N/2, …, N/2 − 1}` per axis. Two-dimensional
/// data is stored row-major with the x index fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    points: usize,
    box_length: f64,
}

impl PeriodicGrid {
    /// Creates a grid; `dim ∈ {1, 2}`, `points` a power of two ≥ 4, `box_length > 0`.
    pub fn new(dim: usize, points: usize, box_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be a power of two ≥ 4, got {points}"
            )));
        }
        if !box_length.is_finite() || box_length <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self {
            dim,
            points,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Node spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    /// Total number of nodes `N^dim`.
    pub fn node_count(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Volume of one grid cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis integer indices of a flat node index (x fastest).
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        debug_assert!(flat < self.node_count());
        match self.dim {
            1 => [flat, 0],
            _ => [flat % self.points, flat / self.points],
        }
    }

    /// Flat index from per-axis indices (unused axes ignored in 1D).
    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[1] * self.points + idx[0],
        }
    }

    /// Physical coordinates of a node.
    pub fn node_coord(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let idx = self.axis_indices(flat);
        (0..self.dim).map(|a| idx[a] as f64 * h).collect()
    }

    /// Signed integer wave number for axis index `i`: the unique `k` in
    /// `[−N/2, N/2)` with `k ≡ i (mod N)`.
    pub fn wave_number(&self, i: usize) -> i64 {
        debug_assert!(i < self.points);
        if i < self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    /// Frequency vector `ξ = k/L` of a flat spectral index.
    pub fn freq_components(&self, flat: usize) -> Vec<f64> {
        let idx = self.axis_indices(flat);
        (0..self.dim)
            .map(|a| self.wave_number(idx[a]) as f64 / self.box_length)
            .collect()
    }

    /// Integer squared wave number `|k|²` of a flat spectral index.
    pub fn wave_number_sq(&self, flat: usize) -> u64 {
        let idx = self.axis_indices(flat);
        (0..self.dim)
            .map(|a| {
                let k = self.wave_number(idx[a]);
                (k * k) as u64
            })
            .sum()
    }

    /// Frequency magnitude `|ξ| = |k|/L` of a flat spectral index.
    pub fn freq_norm(&self, flat: usize) -> f64 {
        (self.wave_number_sq(flat) as f64).sqrt() / self.box_length
    }

    /// Shortest signed displacement `a − b` on the periodic axis.
    pub fn axis_displacement(&self, a: f64, b: f64) -> f64 {
        let l = self.box_length;
        let mut d = (a - b) % l;
        if d < -0.5 * l {
            d += l;
        } else if d >= 0.5 * l {
            d -= l;
        }
        d
    }

    /// Torus distance between two coordinate tuples.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.dim)
            .map(|i| {
                let d = self.axis_displacement(a[i], b[i]);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Real-valued samples of a scalar field or vector field on a [`PeriodicGrid`].
///
/// Storage is component-planar: component `c` occupies
/// `values[c·N^dim .. (c+1)·N^dim]` in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    components: usize,
    values: Vec<f64>,
}

impl GridFunction {
    /// All-zero field with the given number of components.
    pub fn zeros(grid: PeriodicGrid, components: usize) -> Self {
        assert!(components >= 1, "need at least one component");
        Self {
            grid,
            components,
            values: vec![0.0; components * grid.node_count()],
        }
    }

    /// Scalar field sampled from an analytic expression of the node coordinates.
    pub fn scalar_from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = Self::zeros(grid, 1);
        for flat in 0..grid.node_count() {
            let v = f(&grid.node_coord(flat));
            assert!(v.is_finite(), "sampled field value must be finite");
            out.values[flat] = v;
        }
        out
    }

    /// Vector field (one component per grid dimension) sampled from an
    /// analytic expression of the node coordinates.
    pub fn vector_from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let count = grid.node_count();
        let mut out = Self::zeros(grid, grid.dim());
        for flat in 0..count {
            let v = f(&grid.node_coord(flat));
            assert_eq!(v.len(), grid.dim(), "component count mismatch");
            for (c, vc) in v.iter().enumerate() {
                assert!(vc.is_finite(), "sampled field value must be finite");
                out.values[c * count + flat] = *vc;
            }
        }
        out
    }

    /// Wraps an existing value array; validates length and finiteness.
    pub fn from_values(grid: PeriodicGrid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidParameter(
                "need at least one component".into(),
            ));
        }
        if values.len() != components * grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "value array has length {}, expected {}",
                values.len(),
                components * grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid function contains non-finite values".into(),
            ));
        }
        Ok(Self {
            grid,
            components,
            values,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Samples of one component, in node order.
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.node_count();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, flat: usize) -> f64 {
        self.values[c * self.grid.node_count() + flat]
    }

    pub fn set(&mut self, c: usize, flat: usize, v: f64) {
        let n = self.grid.node_count();
        self.values[c * n + flat] = v;
    }

    /// Pointwise Euclidean magnitude across components at one node.
    pub fn magnitude_at(&self, flat: usize) -> f64 {
        let n = self.grid.node_count();
        (0..self.components)
            .map(|c| {
                let v = self.values[c * n + flat];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// In-place `self ← self + α·other`. Grids and shapes must agree.
    pub fn axpy(&mut self, alpha: f64, other: &GridFunction) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.components, other.components, "component mismatch");
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += alpha * b;
        }
    }

    /// In-place scaling `self ← α·self`.
    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Volume-weighted inner product `h^dim Σ_x f(x)·g(x)` over all components.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.components, other.components, "component mismatch");
        let w = self.grid.cell_volume();
        w * self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    /// Mean value of one component over the grid.
    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.component(c);
        comp.iter().sum::<f64>() / comp.len() as f64
    }

    /// Supremum over nodes of the pointwise Euclidean magnitude.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.node_count())
            .map(|flat| self.magnitude_at(flat))
            .fold(0.0, f64::max)
    }

    /// `L^p` norm `(Σ_{x ∈ region} |f(x)|^p h^dim)^{1/p}` of the pointwise
    /// Euclidean magnitude, over the whole grid or a node region.
    /// Exponents `p ≤ 1` (and non-finite `p`) are rejected.
    pub fn lp_norm(&self, p: f64, region: Option<&[bool]>) -> Result<f64> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "L^p exponent must be finite and > 1, got {p}"
            )));
        }
        let count = self.grid.node_count();
        if let Some(r) = region {
            if r.len() != count {
                return Err(Error::GridMismatch(format!(
                    "region has {} nodes, grid has {count}",
                    r.len()
                )));
            }
        }
        let mut sum = 0.0;
        for flat in 0..count {
            if region.is_none_or(|r| r[flat]) {
                sum += self.magnitude_at(flat).powf(p);
            }
        }
        Ok((sum * self.grid.cell_volume()).powf(1.0 / p))
    }

    /// Writes the raw values as little-endian 64-bit floats at `path` and a
    /// JSON sidecar (dim, points, box length, components) at `path + ".json"`.
    pub fn export_binary(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, &bytes)?;
        let sidecar = Sidecar {
            dim: self.grid.dim,
            points_per_axis: self.grid.points,
            box_length: self.grid.box_length,
            components: self.components,
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads a field written by [`GridFunction::export_binary`].
    pub fn import_binary(path: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        let grid = PeriodicGrid::new(sidecar.dim, sidecar.points_per_axis, sidecar.box_length)?;
        let bytes = fs::read(path)?;
        let expected = sidecar.components * grid.node_count() * 8;
        if bytes.len() != expected {
            return Err(Error::GridMismatch(format!(
                "binary payload has {} bytes, sidecar implies {expected}",
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_values(grid, sidecar.components, values)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
    components: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

/// In-place FFT along every axis of row-major data (x fastest).
pub(crate) fn fft_nd(grid: &PeriodicGrid, data: &mut [Complex<f64>], inverse: bool) {
    let n = grid.points_per_axis();
    assert_eq!(data.len(), grid.node_count(), "spectrum length mismatch");
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            for row in data.chunks_exact_mut(n) {
                fft.process(row);
            }
            let mut col = vec![Complex::default(); n];
            for ix in 0..n {
                for iy in 0..n {
                    col[iy] = data[iy * n + ix];
                }
                fft.process(&mut col);
                for iy in 0..n {
                    data[iy * n + ix] = col[iy];
                }
            }
        }
    }
}

/// Unnormalized forward DFT of real samples:
/// `F_k = Σ_j f_j e^{−2πi j·k/N}` along every axis.
pub fn dft_forward_scalar(grid: &PeriodicGrid, values: &[f64]) -> Vec<Complex<f64>> {
    assert_eq!(values.len(), grid.node_count(), "sample length mismatch");
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(grid, &mut data, false);
    data
}

/// Inverse of [`dft_forward_scalar`] (normalized by `N^dim`); returns the real
/// part, which is exact whenever the spectrum is Hermitian-symmetric.
pub fn dft_inverse_scalar(grid: &PeriodicGrid, spectrum: &[Complex<f64>]) -> Vec<f64> {
    let mut data = spectrum.to_vec();
    fft_nd(grid, &mut data, true);
    let scale = 1.0 / grid.node_count() as f64;
    data.iter().map(|z| z.re * scale).collect()
}

/// Forward DFT of every component of a grid function.
pub fn dft_forward(f: &GridFunction) -> Vec<Vec<Complex<f64>>> {
    (0..f.components())
        .map(|c| dft_forward_scalar(f.grid(), f.component(c)))
        .collect()
}

/// Inverse DFT assembling a grid function from per-component spectra.
pub fn dft_inverse(grid: PeriodicGrid, spectra: &[Vec<Complex<f64>>]) -> Result<GridFunction> {
    if spectra.is_empty() {
        return Err(Error::GridMismatch("no spectra supplied".into()));
    }
    let count = grid.node_count();
    if spectra.iter().any(|s| s.len() != count) {
        return Err(Error::GridMismatch(format!(
            "each spectrum must have {count} entries"
        )));
    }
    let mut values = Vec::with_capacity(spectra.len() * count);
    for s in spectra {
        values.extend(dft_inverse_scalar(&grid, s));
    }
    GridFunction::from_values(grid, spectra.len(), values)
}

/// Shape of the domain `Ω` inside the periodic box. Shapes must not touch the
/// box seam: the `δ`-enlargement has to fit strictly inside `(0, L)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaShape {
    /// Interval `(a, b)` on a 1D grid.
    Interval { a: f64, b: f64 },
    /// Axis-aligned open rectangle `(x0, x1) × (y0, y1)` on a 2D grid.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Open disk of given center and radius on a 2D grid.
    Disk { cx: f64, cy: f64, radius: f64 },
}

impl OmegaShape {
    fn dim(&self) -> usize {
        match self {
            OmegaShape::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match *self {
            OmegaShape::Interval { a, b } => a < x[0] && x[0] < b,
            OmegaShape::Rect { x0, x1, y0, y1 } => {
                x0 < x[0] && x[0] < x1 && y0 < x[1] && x[1] < y1
            }
            OmegaShape::Disk { cx, cy, radius } => {
                let dx = x[0] - cx;
                let dy = x[1] - cy;
                dx * dx + dy * dy < radius * radius
            }
        }
    }

    /// Checks that the shape enlarged by `margin` stays inside `(0, L)^dim`
    /// and is non-degenerate.
    fn validate(&self, box_length: f64, margin: f64) -> Result<()> {
        let ok = match *self {
            OmegaShape::Interval { a, b } => a < b && a - margin > 0.0 && b + margin < box_length,
            OmegaShape::Rect { x0, x1, y0, y1 } => {
                x0 < x1
                    && y0 < y1
                    && x0 - margin > 0.0
                    && y0 - margin > 0.0
                    && x1 + margin < box_length
                    && y1 + margin < box_length
            }
            OmegaShape::Disk { cx, cy, radius } => {
                radius > 0.0
                    && cx - radius - margin > 0.0
                    && cy - radius - margin > 0.0
                    && cx + radius + margin < box_length
                    && cy + radius + margin < box_length
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "shape {self:?} enlarged by {margin} does not fit inside (0, {box_length})^dim"
            )))
        }
    }
}

/// Node masks for a domain `Ω` together with its horizon-`δ` enlargement
/// `Ω_δ`, shrinking `Ω_{−δ}`, and the complementary-value collar
/// `Ω_δ \ Ω_{−δ}` of thickness `≈ 2δ`.
///
/// All derived regions come from one signed distance field: the exact
/// Euclidean torus distance to the nearest discrete boundary node of `Ω`
/// (positive inside `Ω`, negative outside), computed by brute force.
#[derive(Debug, Clone)]
pub struct DomainMask {
    grid: PeriodicGrid,
    shape: OmegaShape,
    delta: f64,
    omega: Vec<bool>,
    omega_delta: Vec<bool>,
    omega_minus_delta: Vec<bool>,
    collar: Vec<bool>,
    signed_distance: Vec<f64>,
}

impl DomainMask {
    /// Builds all masks for the shape at horizon `delta`.
    ///
    /// Fails if the grid/shape dimensions disagree, if `L ≤ 4δ`, if the
    /// enlarged shape touches the box seam, or if the inner region `Ω_{−δ}`
    /// contains no grid node (horizon too large for the domain).
    pub fn build(grid: PeriodicGrid, shape: OmegaShape, delta: f64) -> Result<Self> {
        if shape.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "shape dimension {} does not match grid dimension {}",
                shape.dim(),
                grid.dim()
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {delta}"
            )));
        }
        if grid.box_length() <= 4.0 * delta {
            return Err(Error::InvalidParameter(format!(
                "box length {} must exceed 4δ = {} for exact periodization",
                grid.box_length(),
                4.0 * delta
            )));
        }
        shape.validate(grid.box_length(), delta)?;

        let count = grid.node_count();
        let omega: Vec<bool> = (0..count)
            .map(|flat| shape.contains(&grid.node_coord(flat)))
            .collect();
        if !omega.iter().any(|&b| b) {
            return Err(Error::InvalidParameter(
                "domain contains no grid nodes".into(),
            ));
        }

        // Discrete boundary: Ω-nodes with an axis neighbor outside Ω.
        let n = grid.points_per_axis();
        let mut boundary: Vec<usize> = Vec::new();
        for flat in 0..count {
            if !omega[flat] {
                continue;
            }
            let idx = grid.axis_indices(flat);
            let mut on_boundary = false;
            for axis in 0..grid.dim() {
                for step in [n - 1, 1] {
                    let mut nb = idx;
                    nb[axis] = (nb[axis] + step) % n;
                    if !omega[grid.flat_index(nb)] {
                        on_boundary = true;
                    }
                }
            }
            if on_boundary {
                boundary.push(flat);
            }
        }
        let boundary_coords: Vec<Vec<f64>> =
            boundary.iter().map(|&b| grid.node_coord(b)).collect();

        let mut signed_distance = vec![0.0; count];
        for flat in 0..count {
            let x = grid.node_coord(flat);
            let d = boundary_coords
                .iter()
                .map(|b| grid.torus_distance(&x, b))
                .fold(f64::INFINITY, f64::min);
            signed_distance[flat] = if omega[flat] { d } else { -d };
        }

        let omega_delta: Vec<bool> = signed_distance.iter().map(|&d| d > -delta).collect();
        let omega_minus_delta: Vec<bool> = signed_distance.iter().map(|&d| d > delta).collect();
        let collar: Vec<bool> = omega_delta
            .iter()
            .zip(omega_minus_delta.iter())
            .map(|(&o, &i)| o && !i)
            .collect();

        if !omega_minus_delta.iter().any(|&b| b) {
            return Err(Error::InvalidParameter(
                "inner region Ω_{−δ} contains no grid nodes; shrink the horizon".into(),
            ));
        }

        Ok(Self {
            grid,
            shape,
            delta,
            omega,
            omega_delta,
            omega_minus_delta,
            collar,
            signed_distance,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn shape(&self) -> OmegaShape {
        self.shape
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Node indicator of `Ω`.
    pub fn omega(&self) -> &[bool] {
        &self.omega
    }

    /// Node indicator of the enlargement `Ω_δ = {x : d(x, Ω) < δ}`.
    pub fn omega_delta(&self) -> &[bool] {
        &self.omega_delta
    }

    /// Node indicator of the shrinking `Ω_{−δ} = {x ∈ Ω : d(x, ∂Ω) > δ}`.
    pub fn omega_minus_delta(&self) -> &[bool] {
        &self.omega_minus_delta
    }

    /// Node indicator of the complementary-value collar `Ω_δ \ Ω_{−δ}`.
    pub fn collar(&self) -> &[bool] {
        &self.collar
    }

    /// Distance to the nearest discrete boundary node of `Ω`, positive inside
    /// `Ω` and negative outside.
    pub fn signed_distance(&self) -> &[f64] {
        &self.signed_distance
    }

    /// Writes the `Ω` indicator as 0/1 bytes plus the standard JSON sidecar.
    pub fn export_binary(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.omega.iter().map(|&b| b as u8).collect();
        fs::write(path, &bytes)?;
        let sidecar = Sidecar {
            dim: self.grid.dim,
            points_per_axis: self.grid.points,
            box_length: self.grid.box_length,
            components: 1,
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

/// Measure `(#nodes)·h^dim` of a node region.
pub fn region_measure(grid: &PeriodicGrid, region: &[bool]) -> f64 {
    assert_eq!(region.len(), grid.node_count(), "region length mismatch");
    region.iter().filter(|&&b| b).count() as f64 * grid.cell_volume()
}
