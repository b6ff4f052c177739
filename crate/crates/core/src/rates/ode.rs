use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `F' = C0 t^{-a0} F + C1 t^{-a1} F^{b1} + C2 t^{-a2} F^{b2} + C3 t^{g2 - 1}`,
/// `F(1) = K0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOdeSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c: [f64; 4],
    pub k0: f64,
}

impl ComparisonOdeSpec {
    /// Coefficient set of the weighted energy estimate with weight exponent `gamma`.
    pub fn weighted_energy(gamma: f64) -> Self {
        Self {
            alpha0: 1.25,
            alpha1: 3.0 / (4.0 * gamma),
            alpha2: 3.0 / (2.0 * gamma),
            beta1: (2.0 * gamma - 1.0) / (2.0 * gamma),
            beta2: (gamma - 1.0) / gamma,
            c: [1.0; 4],
            k0: 1.0,
        }
    }

    pub fn gamma1(&self) -> f64 {
        (1.0 - self.alpha1) / (1.0 - self.beta1)
    }

    pub fn gamma2(&self) -> f64 {
        (1.0 - self.alpha2) / (1.0 - self.beta2)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha0 > 1.0
            && self.alpha1 < 1.0
            && self.alpha2 < 1.0
            && self.beta1 < 1.0
            && self.beta2 < 2.0
            && self.c.iter().all(|c| *c >= 0.0 && c.is_finite())
            && self.k0 > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("coefficients out of range: {self:?}")));
        }
        let (g1, g2) = (self.gamma1(), self.gamma2());
        if !(g2 > 0.0) || g1 < g2 {
            return Err(Error::Hypothesis(format!(
                "need gamma1 >= gamma2 > 0, got gamma1 = {g1}, gamma2 = {g2}"
            )));
        }
        Ok(())
    }

    /// `d(ln F)/d(ln t)` as a function of `s = ln t`, `y = ln F`.
    fn rhs(&self, s: f64, y: f64) -> f64 {
        let t = s.exp();
        let [c0, c1, c2, c3] = self.c;
        let mut acc = 0.0;
        if c0 != 0.0 {
            acc += c0 * t.powf(1.0 - self.alpha0);
        }
        if c1 != 0.0 {
            acc += c1 * ((1.0 - self.alpha1) * s + (self.beta1 - 1.0) * y).exp();
        }
        if c2 != 0.0 {
            acc += c2 * ((1.0 - self.alpha2) * s + (self.beta2 - 1.0) * y).exp();
        }
        if c3 != 0.0 {
            acc += c3 * (self.gamma2() * s - y).exp();
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub t_end: f64,
    pub final_value: f64,
    pub ratio_end: f64,
    /// Running maximum of `F / t^{gamma1}` over `[t_end / 2, t_end]`.
    pub tail_max: f64,
    pub sup_ratio: f64,
    /// `1 - ratio_end / tail_max`.
    pub plateau_deviation: f64,
    pub plateau: bool,
    pub blow_up: Option<String>,
    pub steps: usize,
    /// `(t, F)` at every accepted step.
    pub samples: Vec<[f64; 2]>,
}

impl OdeReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Linear interpolation of `F` in `ln t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let i = self.samples.iter().position(|p| p[0] >= t)?;
        if i == 0 {
            return Some(self.samples[0][1]);
        }
        let [t0, f0] = self.samples[i - 1];
        let [t1, f1] = self.samples[i];
        let w = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
        Some((f0.ln() * (1.0 - w) + f1.ln() * w).exp())
    }
}

const PLATEAU_TOL: f64 = 0.1;
const MAX_STEPS: usize = 200_000;
const MAX_LOG_VALUE: f64 = 700.0;

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate the comparison ODE from `t = 1` to `t_end` in `(ln t, ln F)` with
/// adaptive Dormand-Prince steps and report the behaviour of `F / t^{gamma1}`.
pub fn comparison_ode_envelope(spec: &ComparisonOdeSpec, t_end: f64) -> Result<OdeReport> {
    spec.validate()?;
    if !(t_end > 1.0) {
        return Err(Error::InvalidArgument(format!("t_end must exceed 1, got {t_end}")));
    }
    let (g1, g2) = (spec.gamma1(), spec.gamma2());
    let s_end = t_end.ln();
    let (rtol, atol) = (1e-10, 1e-12);
    let h_max = 0.05;
    let mut s = 0.0;
    let mut y = spec.k0.ln();
    let mut h: f64 = 1e-3;
    let mut k = [0.0; 7];
    k[0] = spec.rhs(s, y);
    let mut samples = vec![[1.0, spec.k0]];
    let mut blow_up = None;
    let mut steps = 0;
    while s < s_end {
        if steps >= MAX_STEPS {
            blow_up = Some(format!("step limit reached at t = {:.6e}", s.exp()));
            break;
        }
        h = h.min(s_end - s).min(h_max);
        for i in 1..7 {
            let yi = y + h * (0..i).map(|j| A[i - 1][j] * k[j]).sum::<f64>();
            k[i] = spec.rhs(s + C[i] * h, yi);
        }
        let y_new = y + h * (0..6).map(|j| A[5][j] * k[j]).sum::<f64>();
        let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = atol + rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if !y_new.is_finite() || y_new > MAX_LOG_VALUE {
            blow_up = Some(format!("F exceeds e^{MAX_LOG_VALUE} near t = {:.6e}", (s + h).exp()));
            break;
        }
        if ratio <= 1.0 {
            s += h;
            y = y_new;
            k[0] = k[6];
            steps += 1;
            samples.push([s.exp(), y.exp()]);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 {
            blow_up = Some(format!("step size underflow near t = {:.6e}", s.exp()));
            break;
        }
    }
    let ratio_of = |p: &[f64; 2]| p[1] / p[0].powf(g1);
    let sup_ratio = samples.iter().map(ratio_of).fold(0.0, f64::max);
    let tail_max = samples
        .iter()
        .filter(|p| p[0] >= 0.5 * t_end)
        .map(ratio_of)
        .fold(0.0, f64::max);
    let last = *samples.last().expect("initial sample");
    let ratio_end = ratio_of(&last);
    let plateau_deviation = if tail_max > 0.0 { 1.0 - ratio_end / tail_max } else { f64::INFINITY };
    let plateau = blow_up.is_none() && plateau_deviation <= PLATEAU_TOL;
    Ok(OdeReport {
        gamma1: g1,
        gamma2: g2,
        t_end,
        final_value: last[1],
        ratio_end,
        tail_max,
        sup_ratio,
        plateau_deviation,
        plateau,
        blow_up,
        steps,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_forcing_only() {
        let spec = ComparisonOdeSpec {
            c: [0.0, 0.0, 0.0, 1.0],
            k0: 3.0,
            ..ComparisonOdeSpec::weighted_energy(2.0)
        };
        assert!((spec.gamma2() - 0.5).abs() < 1e-15);
        let r = comparison_ode_envelope(&spec, 1e4).unwrap();
        for p in &r.samples {
            let exact = 3.0 + 2.0 * (p[0].sqrt() - 1.0);
            assert!((p[1] - exact).abs() <= 1e-8 * exact, "t = {}", p[0]);
        }
        // F / t^{5/2} is largest at t = 1
        assert!((r.sup_ratio - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_energy_plateau() {
        let r = comparison_ode_envelope(&ComparisonOdeSpec::weighted_energy(2.0), 1e6).unwrap();
        assert!(r.blow_up.is_none());
        assert!(r.plateau, "deviation {}", r.plateau_deviation);
    }

    #[test]
    fn weighted_energy_exponents() {
        let s = ComparisonOdeSpec::weighted_energy(2.0);
        assert!((s.gamma1() - 2.5).abs() < 1e-15 && (s.gamma2() - 0.5).abs() < 1e-15);
        assert!((s.alpha1 - 0.375).abs() < 1e-15 && (s.beta1 - 0.75).abs() < 1e-15);
        assert!((s.alpha2 - 0.75).abs() < 1e-15 && (s.beta2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hypothesis_violation_is_rejected() {
        let spec = ComparisonOdeSpec {
            alpha1: 0.9,
            beta1: 0.0,
            ..ComparisonOdeSpec::weighted_energy(2.0)
        };
        assert!(spec.gamma1() < spec.gamma2());
        assert!(matches!(comparison_ode_envelope(&spec, 10.0), Err(Error::Hypothesis(_))));
    }
}
