//! Three-dimensional real-to-complex transforms built from 1D `realfft` /
//! `rustfft` line transforms.
//!
//! Convention: `f(x) = sum_k f_hat(k) exp(i k.x)` with `x` measured from the
//! box center, so the forward transform carries a `1/N` factor (the `k = 0`
//! coefficient is the spatial mean) and a `(-1)^(i1+i2+i3)` phase that moves
//! the origin from the corner node to the center node.

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) struct Transform3d {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) fn plan(n: usize) -> Arc<Transform3d> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Transform3d>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("transform cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut complex = FftPlanner::<f64>::new();
            Arc::new(Transform3d {
                n,
                r2c: real.plan_fft_forward(n),
                c2r: real.plan_fft_inverse(n),
                forward: complex.plan_fft_forward(n),
                inverse: complex.plan_fft_inverse(n),
            })
        })
        .clone()
}

#[inline]
fn parity_sign(i1: usize, i2: usize, i3: usize) -> f64 {
    if (i1 + i2 + i3) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Transform3d {
    fn nh(&self) -> usize {
        self.n / 2 + 1
    }

    /// Normalized forward transform of a row-major real array.
    pub(crate) fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let nh = self.nh();
        assert_eq!(input.len(), n * n * n);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * nh];

        out.par_chunks_mut(nh)
            .zip(input.par_chunks(n))
            .for_each_init(
                || (vec![0.0; n], self.r2c.make_scratch_vec()),
                |(row, scratch), (dst, src)| {
                    row.copy_from_slice(src);
                    self.r2c
                        .process_with_scratch(row, dst, scratch)
                        .expect("r2c line transform");
                },
            );

        self.pass_axis2(&mut out, &*self.forward);
        self.pass_axis1(&mut out, &*self.forward);

        let scale = 1.0 / (n * n * n) as f64;
        out.par_chunks_mut(n * nh)
            .enumerate()
            .for_each(|(i1, plane)| {
                for i2 in 0..n {
                    for i3 in 0..nh {
                        plane[i2 * nh + i3] *= scale * parity_sign(i1, i2, i3);
                    }
                }
            });
        out
    }

    /// Inverse transform; the input is treated as Hermitian-symmetric.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let nh = self.nh();
        assert_eq!(coeffs.len(), n * n * nh);
        let mut work: Vec<Complex64> = coeffs.to_vec();
        work.par_chunks_mut(n * nh)
            .enumerate()
            .for_each(|(i1, plane)| {
                for i2 in 0..n {
                    for i3 in 0..nh {
                        plane[i2 * nh + i3] *= parity_sign(i1, i2, i3);
                    }
                }
            });

        self.pass_axis1(&mut work, &*self.inverse);
        self.pass_axis2(&mut work, &*self.inverse);

        let mut out = vec![0.0; n * n * n];
        out.par_chunks_mut(n)
            .zip(work.par_chunks_mut(nh))
            .for_each_init(
                || self.c2r.make_scratch_vec(),
                |scratch, (dst, src)| {
                    // Only the real parts of the self-conjugate end points are meaningful.
                    src[0].im = 0.0;
                    src[nh - 1].im = 0.0;
                    self.c2r
                        .process_with_scratch(src, dst, scratch)
                        .expect("c2r line transform");
                },
            );
        out
    }

    /// Transform along the middle axis, one `i1` plane at a time.
    fn pass_axis2(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let nh = self.nh();
        data.par_chunks_mut(n * nh).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n * nh],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), plane| {
                for i2 in 0..n {
                    for i3 in 0..nh {
                        buf[i3 * n + i2] = plane[i2 * nh + i3];
                    }
                }
                fft.process_with_scratch(buf, scratch);
                for i2 in 0..n {
                    for i3 in 0..nh {
                        plane[i2 * nh + i3] = buf[i3 * n + i2];
                    }
                }
            },
        );
    }

    /// Transform along the slowest axis via a gathered copy per `i2` column.
    fn pass_axis1(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let nh = self.nh();
        let shared: &[Complex64] = data;
        let columns: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i2| {
                let mut buf = vec![Complex64::new(0.0, 0.0); n * nh];
                for i1 in 0..n {
                    let base = (i1 * n + i2) * nh;
                    for i3 in 0..nh {
                        buf[i3 * n + i1] = shared[base + i3];
                    }
                }
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(&mut buf, &mut scratch);
                buf
            })
            .collect();
        data.par_chunks_mut(n * nh)
            .enumerate()
            .for_each(|(i1, plane)| {
                for (i2, col) in columns.iter().enumerate() {
                    for i3 in 0..nh {
                        plane[i2 * nh + i3] = col[i3 * n + i1];
                    }
                }
            });
    }
}
