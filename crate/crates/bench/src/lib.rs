//! Shared fixtures for the benchmarks.

use decaylab_core::initdata::{make_low_frequency_data, DataKind, SpectralCondition};
use decaylab_core::{GridSpec, State};

/// Localized low-frequency data on an `n`-point grid of side `8 pi`.
pub fn fixture(n: usize) -> State {
    let grid = GridSpec::new(n, 8.0 * std::f64::consts::PI).expect("valid grid");
    let mut c = SpectralCondition {
        c0: 0.0,
        cutoff_modes: 2,
        eta: 0.0,
        amplitude: 1e-2,
        sigma: 2.5,
        seed: 1,
    };
    c.c0 = 0.1 * c.envelope_scale(grid);
    make_low_frequency_data(grid, &c, DataKind::Localized).expect("admissible data")
}
