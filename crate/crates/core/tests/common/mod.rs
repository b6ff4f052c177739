#![allow(dead_code)]

use decaylab_core::spectral::ops::leray_project;
use decaylab_core::{GridSpec, SpectralField, SpectralVectorField, State};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Real field built from random coefficients on modes with every `|j_i| <= jmax`,
/// scaled so the largest physical value is `amp`.
pub fn smooth_field(grid: GridSpec, jmax: i64, amp: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for m in grid.modes() {
        if m.is_mean() || m.j.iter().any(|v| v.abs() > jmax) {
            continue;
        }
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        f.coeffs_mut()[m.idx] = c;
    }
    // round trip enforces Hermitian symmetry on the j3 = 0 plane
    let phys = f.to_physical();
    let max = phys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled: Vec<f64> = phys.iter().map(|v| v * amp / max).collect();
    SpectralField::from_physical(grid, &scaled).unwrap()
}

pub fn smooth_vector(grid: GridSpec, jmax: i64, amp: f64, rng: &mut ChaCha8Rng) -> SpectralVectorField {
    SpectralVectorField::new([
        smooth_field(grid, jmax, amp, rng),
        smooth_field(grid, jmax, amp, rng),
        smooth_field(grid, jmax, amp, rng),
    ])
    .unwrap()
}

pub fn smooth_state(grid: GridSpec, amp: f64, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let varrho = smooth_field(grid, 2, amp, &mut rng);
    let u = smooth_vector(grid, 2, amp, &mut rng);
    let b = leray_project(&smooth_vector(grid, 2, amp, &mut rng));
    State::new(varrho, u, b, 0.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
