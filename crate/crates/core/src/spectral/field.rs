use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use super::fft;
use super::grid::{GridSpec, Mode};
use crate::error::{Error, Result};

/// Fourier coefficients of a real periodic scalar field (half spectrum).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients for n = {}, got {}",
                grid.spectral_len(),
                grid.n(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_physical(grid: GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != grid.physical_len() {
            return Err(Error::GridMismatch(format!(
                "expected {} grid values for n = {}, got {}",
                grid.physical_len(),
                grid.n(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            coeffs: fft::plan(grid.n()).forward(values),
        })
    }

    /// Sample a function of the physical coordinate on the grid and transform.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = sample(grid, f);
        Self::from_physical(grid, &values).expect("sampled on the same grid")
    }

    pub fn to_physical(&self) -> Vec<f64> {
        fft::plan(self.grid.n()).inverse(&self.coeffs)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at a signed wave vector, resolving conjugate partners.
    pub fn coeff_at(&self, j: [i64; 3]) -> Option<Complex64> {
        if let Some(idx) = self.grid.index_of(j) {
            return Some(self.coeffs[idx]);
        }
        let n = self.grid.n() as i64;
        let flip = |v: i64| if v == -n / 2 { v } else { -v };
        self.grid
            .index_of([flip(j[0]), flip(j[1]), -j[2]])
            .map(|idx| self.coeffs[idx].conj())
    }

    /// Spatial mean (the `k = 0` coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `||f||^2_{L^2}` as a full-spectrum mode sum.
    pub fn l2_norm_squared(&self) -> f64 {
        let nh = self.grid.half_n();
        let n = self.grid.n();
        let mut acc = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let i3 = idx % nh;
            let w = if i3 == 0 || i3 == n / 2 { 1.0 } else { 2.0 };
            acc += w * c.norm_sqr();
        }
        acc * self.grid.volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    /// Real inner product `int f g dx` computed from the coefficients.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let nh = self.grid.half_n();
        let n = self.grid.n();
        let mut acc = 0.0;
        for (idx, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let i3 = idx % nh;
            let w = if i3 == 0 || i3 == n / 2 { 1.0 } else { 2.0 };
            acc += w * (a * b.conj()).re;
        }
        acc * self.grid.volume()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest violation of `f_hat(-k) = conj(f_hat(k))` inside the
    /// self-conjugate planes of the half layout.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.grid.n();
        let nh = self.grid.half_n();
        let mut worst: f64 = 0.0;
        for i3 in [0, nh - 1] {
            for i1 in 0..n {
                for i2 in 0..n {
                    let p1 = (n - i1) % n;
                    let p2 = (n - i2) % n;
                    let a = self.coeffs[self.grid.spectral_index(i1, i2, i3)];
                    let b = self.coeffs[self.grid.spectral_index(p1, p2, i3)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    /// New field with each coefficient replaced by `f(mode, coeff)`.
    pub fn map_modes(&self, f: impl Fn(&Mode, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .grid
            .modes()
            .zip(&self.coeffs)
            .map(|(m, &c)| f(&m, c))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

/// Three scalar fields on a common grid.
///
/// `solenoidal` is set only by operations that produce divergence-free output
/// (curl, Leray projection); it is a promise, checked by
/// [`SpectralVectorField::divergence_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    comps: [SpectralField; 3],
    solenoidal: bool,
}

impl SpectralVectorField {
    pub fn new(comps: [SpectralField; 3]) -> Result<Self> {
        let g = comps[0].grid;
        if comps.iter().any(|c| c.grid != g) {
            return Err(Error::GridMismatch(
                "vector components live on different grids".into(),
            ));
        }
        Ok(Self {
            comps,
            solenoidal: false,
        })
    }

    pub(crate) fn with_flag(comps: [SpectralField; 3], solenoidal: bool) -> Self {
        Self { comps, solenoidal }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            comps: [
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
            ],
            solenoidal: true,
        }
    }

    pub fn from_physical(grid: GridSpec, values: [&[f64]; 3]) -> Result<Self> {
        Self::new([
            SpectralField::from_physical(grid, values[0])?,
            SpectralField::from_physical(grid, values[1])?,
            SpectralField::from_physical(grid, values[2])?,
        ])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let c = |i: usize| SpectralField::from_fn(grid, |x| f(x)[i]);
        Self::new([c(0), c(1), c(2)]).expect("same grid")
    }

    pub fn to_physical(&self) -> [Vec<f64>; 3] {
        let [a, b, c] = &self.comps;
        let (a, (b, c)) = rayon::join(
            || a.to_physical(),
            || rayon::join(|| b.to_physical(), || c.to_physical()),
        );
        [a, b, c]
    }

    pub fn grid(&self) -> GridSpec {
        self.comps[0].grid
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.comps[i]
    }

    pub fn components(&self) -> &[SpectralField; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [SpectralField; 3] {
        self.comps
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.comps.iter().map(SpectralField::l2_norm_squared).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps
            .iter()
            .map(SpectralField::max_abs_coeff)
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(SpectralField::is_finite)
    }

    /// `max_k |k . v_hat(k)|` relative to `max |v_hat|` (0 for the zero field).
    pub fn divergence_residual(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let g = self.grid();
        let worst = g
            .modes()
            .map(|m| {
                let d = (0..3)
                    .map(|i| self.comps[i].coeffs[m.idx] * m.k_odd[i])
                    .sum::<Complex64>();
                d.norm()
            })
            .fold(0.0, f64::max);
        // Normalize the wavenumber so the test is scale free.
        let kmax = g.dk() * (g.n() / 2) as f64;
        worst / (scale * kmax)
    }

    pub fn map_components(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
            solenoidal: false,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            comps: [
                self.comps[0].scale(a),
                self.comps[1].scale(a),
                self.comps[2].scale(a),
            ],
            solenoidal: self.solenoidal,
        }
    }
}

impl Add for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn add(self, rhs: Self) -> SpectralVectorField {
        SpectralVectorField {
            comps: [
                &self.comps[0] + &rhs.comps[0],
                &self.comps[1] + &rhs.comps[1],
                &self.comps[2] + &rhs.comps[2],
            ],
            solenoidal: self.solenoidal && rhs.solenoidal,
        }
    }
}

impl Sub for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn sub(self, rhs: Self) -> SpectralVectorField {
        SpectralVectorField {
            comps: [
                &self.comps[0] - &rhs.comps[0],
                &self.comps[1] - &rhs.comps[1],
                &self.comps[2] - &rhs.comps[2],
            ],
            solenoidal: self.solenoidal && rhs.solenoidal,
        }
    }
}

/// Evaluate `f` at every grid node (row-major, coordinates from the center).
pub fn sample(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let n = grid.n();
    let mut out = Vec::with_capacity(grid.physical_len());
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                out.push(f([
                    grid.coordinate(i1),
                    grid.coordinate(i2),
                    grid.coordinate(i3),
                ]));
            }
        }
    }
    out
}

/// `||f||_{L^2}` of physical grid values by the cell-measure sum.
pub fn physical_l2_norm(grid: GridSpec, values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// Forward then inverse transform of physical values.
pub fn transform_roundtrip(grid: GridSpec, values: &[f64]) -> Result<Vec<f64>> {
    Ok(SpectralField::from_physical(grid, values)?.to_physical())
}
