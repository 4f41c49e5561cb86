//! Adaptive Gauss–Kronrod (G7, K15) integration.
//!
//! Deliberately independent of the quadrature-rule machinery built from
//! recurrence coefficients: this integrator only sees the integrand as a
//! black box, so it can serve as the second route in the
//! density-vs-quadrature cross checks.

use crate::{Error, Result};

/// Kronrod-15 abscissas on [0, 1] side (symmetric); published digits.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];

/// Kronrod-15 weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Embedded Gauss-7 weights for abscissas XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let f_mid = f(mid);
    let mut kron = WGK[7] * f_mid;
    let mut gauss = WG[3] * f_mid;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(mid - dx) + f(mid + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // (a, b, value, error) intervals, refined worst-first
    let seed = gk15(&mut f, a, b);
    let mut stack = vec![(a, b, seed.0, seed.1)];
    let mut evaluations = 15usize;
    loop {
        let total_err: f64 = stack.iter().map(|s| s.3).sum();
        if total_err <= tol {
            return Ok(stack.iter().map(|s| s.2).sum());
        }
        if evaluations > 2_000_000 {
            return Err(Error::Convergence(format!(
                "adaptive integration stalled: error {total_err:.3e} > tol {tol:.3e}"
            )));
        }
        let (idx, _) = stack
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = stack.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Convergence(
                "interval collapsed below floating-point resolution".into(),
            ));
        }
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        evaluations += 30;
        stack.push((lo, mid, left.0, left.1));
        stack.push((mid, hi, right.0, right.1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let v = adaptive(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let v = adaptive(|x| (-x * x / 2.0).exp(), -8.0, 8.0, 1e-12).unwrap();
        assert_relative_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-11);
    }

    #[test]
    fn peaked_integrand() {
        // sharp peak at 0.3 exercises the adaptive refinement
        let v = adaptive(|x: f64| 1.0 / (1e-6 + (x - 0.3).powi(2)), 0.0, 1.0, 1e-9).unwrap();
        let atan_part = (0.7_f64 / 1e-3).atan() + (0.3_f64 / 1e-3).atan();
        assert_relative_eq!(v, atan_part / 1e-3, max_relative = 1e-9);
    }
}
