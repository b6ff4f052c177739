use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Cubic periodic box `[-L/2, L/2)^3` sampled with `n` points per direction.
///
/// Spectral data uses the real-to-complex half layout: indices `(i1, i2, i3)`
/// with `i1, i2 < n` and `i3 <= n/2`, flattened row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be even and >= 4, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Number of stored modes along the last (halved) axis.
    pub fn half_n(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn physical_len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn spectral_len(&self) -> usize {
        self.n * self.n * self.half_n()
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Signed integer wave index in `[-n/2, n/2)` for a storage index.
    pub fn wave_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.dk() * self.wave_index(i) as f64
    }

    /// Wavenumber used by odd-order multipliers: the Nyquist index has no
    /// conjugate partner, so its first-derivative symbol is zero.
    pub fn odd_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Physical coordinate of grid node `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.dx()
    }

    pub fn spectral_index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.half_n() + i3
    }

    pub fn physical_index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    /// Storage index of a signed wave vector, `None` if it is not stored in the
    /// half layout (negative last component) or out of range.
    pub fn index_of(&self, j: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let wrap = |v: i64| -> Option<usize> {
            if v < -n / 2 || v >= n / 2 {
                None
            } else {
                Some(v.rem_euclid(n) as usize)
            }
        };
        if j[2] < 0 || j[2] > n / 2 {
            return None;
        }
        let i1 = wrap(j[0])?;
        let i2 = wrap(j[1])?;
        // j3 = n/2 is stored at the end of the half axis.
        let i3 = j[2] as usize;
        Some(self.spectral_index(i1, i2, i3))
    }

    /// Multiplicity of a stored mode in full-spectrum sums.
    pub fn hermitian_weight(&self, i3: usize) -> f64 {
        if i3 == 0 || (i3 == self.n / 2) {
            1.0
        } else {
            2.0
        }
    }

    /// Iterate over every stored mode.
    pub fn modes(&self) -> ModeIter {
        ModeIter {
            grid: *self,
            next: 0,
        }
    }
}

/// One stored Fourier mode.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub idx: usize,
    pub storage: [usize; 3],
    pub j: [i64; 3],
    pub k: [f64; 3],
    /// Wave vector with Nyquist components zeroed.
    pub k_odd: [f64; 3],
    pub weight: f64,
}

impl Mode {
    pub fn k_squared(&self) -> f64 {
        self.k.iter().map(|v| v * v).sum()
    }

    pub fn k_odd_squared(&self) -> f64 {
        self.k_odd.iter().map(|v| v * v).sum()
    }

    pub fn j_squared(&self) -> i64 {
        self.j.iter().map(|v| v * v).sum()
    }

    pub fn is_mean(&self) -> bool {
        self.idx == 0
    }
}

pub struct ModeIter {
    grid: GridSpec,
    next: usize,
}

impl Iterator for ModeIter {
    type Item = Mode;

    fn next(&mut self) -> Option<Mode> {
        let g = &self.grid;
        if self.next >= g.spectral_len() {
            return None;
        }
        let idx = self.next;
        self.next += 1;
        let nh = g.half_n();
        let i3 = idx % nh;
        let i2 = (idx / nh) % g.n;
        let i1 = idx / (nh * g.n);
        // The last axis stores j3 = 0..=n/2 with positive sign.
        let j3 = i3 as i64;
        let k3 = g.dk() * j3 as f64;
        let k3_odd = if i3 == g.n / 2 { 0.0 } else { k3 };
        Some(Mode {
            idx,
            storage: [i1, i2, i3],
            j: [g.wave_index(i1), g.wave_index(i2), j3],
            k: [g.wavenumber(i1), g.wavenumber(i2), k3],
            k_odd: [g.odd_wavenumber(i1), g.odd_wavenumber(i2), k3_odd],
            weight: g.hermitian_weight(i3),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.grid.spectral_len() - self.next;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for ModeIter {}
