//! Exact verification of the quadratic-harness identities: the Jacobi
//! matrices X, Y of the time-linear family J(t) = Y + tX, their
//! commutator relation, the quadratic-variance matrix identity, the
//! (η, θ) ↔ (A+C, B+C) parameter maps, and the conditional-moment
//! evaluators.
//!
//! The matrix identities are polynomial in all parameters, so they are
//! checked in exact rational arithmetic: the residual of a true identity
//! is exactly zero away from the truncation edge, and anything nonzero
//! is a genuine failure rather than rounding.

use num::{BigRational, One, Signed, Zero};

use crate::{Error, Result};

pub type Rat = BigRational;

/// Exact rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

fn rint(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

// ---------------------------------------------------------------------
// Parameter maps
// ---------------------------------------------------------------------

/// Standard-form harness parameters: η > 0, θ > −2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessParams {
    pub eta: f64,
    pub theta: f64,
}

/// The image (A+C, B+C) of the parameter map: a real pair for θ ≥ 2, a
/// conjugate pair re ∓ i·im for −2 < θ < 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalSums {
    RealPair { ac: f64, bc: f64 },
    ConjugatePair { re: f64, im: f64 },
}

/// Forward map (η, θ) ↦ (A+C, B+C) = (θ ∓ √(θ²−4))/(2η).
pub fn parameter_maps(hp: &HarnessParams) -> Result<MarginalSums> {
    if !(hp.eta > 0.0) {
        return Err(Error::Domain(format!("need eta > 0, got {}", hp.eta)));
    }
    if !(hp.theta > -2.0) {
        return Err(Error::Domain(format!("need theta > -2, got {}", hp.theta)));
    }
    let theta = hp.theta;
    if theta >= 2.0 {
        let root = (theta * theta - 4.0).sqrt();
        Ok(MarginalSums::RealPair {
            ac: (theta - root) / (2.0 * hp.eta),
            bc: (theta + root) / (2.0 * hp.eta),
        })
    } else {
        let root = (4.0 - theta * theta).sqrt();
        Ok(MarginalSums::ConjugatePair {
            re: theta / (2.0 * hp.eta),
            im: root / (2.0 * hp.eta),
        })
    }
}

/// Inverse map: η = 1/√((A+C)(B+C)), θ = (2C+A+B)/√((A+C)(B+C)).
pub fn inverse_parameter_maps(sums: &MarginalSums) -> Result<HarnessParams> {
    let (product, total) = match *sums {
        MarginalSums::RealPair { ac, bc } => (ac * bc, ac + bc),
        MarginalSums::ConjugatePair { re, im } => (re * re + im * im, 2.0 * re),
    };
    if product <= 0.0 {
        return Err(Error::Domain(format!(
            "(A+C)(B+C) = {product} must be positive"
        )));
    }
    let eta = 1.0 / product.sqrt();
    Ok(HarnessParams {
        eta,
        theta: total * eta,
    })
}

/// The (A+C, B+C) sums of a validated parameter set.
pub fn sums_of(pp: &crate::measure::ProcessParams) -> MarginalSums {
    match pp.pair() {
        crate::measure::AbPair::Real { a, b } => MarginalSums::RealPair {
            ac: a + pp.c(),
            bc: b + pp.c(),
        },
        crate::measure::AbPair::Conjugate { re, im } => MarginalSums::ConjugatePair {
            re: re + pp.c(),
            im,
        },
    }
}

// ---------------------------------------------------------------------
// Exact Jacobi matrices
// ---------------------------------------------------------------------

type Mat = Vec<Vec<Rat>>;

/// K×K truncations of the Jacobi components: X upper-bidiagonal with
/// diagonal β_n = 2(C+n) and superdiagonal δ_n; Y tridiagonal with
/// subdiagonal 1, diagonal α_n and superdiagonal γ_n.
///
/// α_n carries the quadratic term 2n²: the time-linear recurrence
/// derived from the base family by the shift rule forces
/// α_n = AB+AC+BC + (2(A+B+C)−1)n + 2n², and the commutator identity
/// below fails by a constant without it.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiTruncation {
    pub k: usize,
    pub x: Mat,
    pub y: Mat,
}

/// Coefficient α_n of the shifted family.
pub fn alpha_coeff(a: &Rat, b: &Rat, c: &Rat, n: usize) -> Rat {
    let nr = rint(n as i64);
    a * b + a * c + b * c + (rint(2) * (a + b + c) - Rat::one()) * &nr + rint(2) * &nr * &nr
}

/// Coefficient β_n = 2(C+n).
pub fn beta_coeff(c: &Rat, n: usize) -> Rat {
    rint(2) * (c + rint(n as i64))
}

/// Coefficient γ_n = n(A+B+n−1)(A+C+n−1)(B+C+n−1).
pub fn gamma_coeff(a: &Rat, b: &Rat, c: &Rat, n: usize) -> Rat {
    let nm1 = rint(n as i64 - 1);
    rint(n as i64) * (a + b + &nm1) * (a + c + &nm1) * (b + c + &nm1)
}

/// Coefficient δ_n = 2n(A+C+n−1)(B+C+n−1).
pub fn delta_coeff(a: &Rat, b: &Rat, c: &Rat, n: usize) -> Rat {
    let nm1 = rint(n as i64 - 1);
    rint(2 * n as i64) * (a + c + &nm1) * (b + c + &nm1)
}

/// Exact K×K truncations of X and Y.
pub fn jacobi_matrices(a: &Rat, b: &Rat, c: &Rat, k: usize) -> Result<JacobiTruncation> {
    if k < 4 {
        return Err(Error::Argument("truncation needs K >= 4".into()));
    }
    let mut x = vec![vec![Rat::zero(); k]; k];
    let mut y = vec![vec![Rat::zero(); k]; k];
    for n in 0..k {
        x[n][n] = beta_coeff(c, n);
        y[n][n] = alpha_coeff(a, b, c, n);
        if n >= 1 {
            x[n - 1][n] = delta_coeff(a, b, c, n);
            y[n - 1][n] = gamma_coeff(a, b, c, n);
            y[n][n - 1] = Rat::one();
        }
    }
    Ok(JacobiTruncation { k, x, y })
}

fn mat_mul(p: &Mat, q: &Mat) -> Mat {
    let k = p.len();
    let mut out = vec![vec![Rat::zero(); k]; k];
    for i in 0..k {
        for l in 0..k {
            if p[i][l].is_zero() {
                continue;
            }
            for j in 0..k {
                if q[l][j].is_zero() {
                    continue;
                }
                let add = &p[i][l] * &q[l][j];
                out[i][j] += add;
            }
        }
    }
    out
}

fn mat_lin(terms: &[(Rat, &Mat)]) -> Mat {
    let k = terms[0].1.len();
    let mut out = vec![vec![Rat::zero(); k]; k];
    for (coeff, m) in terms {
        if coeff.is_zero() {
            continue;
        }
        for i in 0..k {
            for j in 0..k {
                if !m[i][j].is_zero() {
                    out[i][j] += coeff * &m[i][j];
                }
            }
        }
    }
    out
}

fn interior_max_abs(m: &Mat, margin: usize) -> Rat {
    let k = m.len().saturating_sub(margin);
    let mut worst = Rat::zero();
    for row in m.iter().take(k) {
        for v in row.iter().take(k) {
            if v.abs() > worst {
                worst = v.abs();
            }
        }
    }
    worst
}

/// Max |entry| of XY − YX − ½X² − 2Y over the interior block
/// [0, K−4]²; exactly zero when the identity holds.
pub fn commutator_residual(jt: &JacobiTruncation) -> Rat {
    let xy = mat_mul(&jt.x, &jt.y);
    let yx = mat_mul(&jt.y, &jt.x);
    let xx = mat_mul(&jt.x, &jt.x);
    let residual = mat_lin(&[
        (Rat::one(), &xy),
        (-Rat::one(), &yx),
        (-rat(1, 2), &xx),
        (rint(-2), &jt.y),
    ]);
    interior_max_abs(&residual, 3)
}

fn jacobi_at(jt: &JacobiTruncation, t: &Rat) -> Mat {
    jt.y.iter()
        .zip(&jt.x)
        .map(|(yr, xr)| yr.iter().zip(xr).map(|(y, x)| y + t * x).collect())
        .collect()
}

/// Interior residual of the quadratic-variance matrix identity
///
/// ```text
/// J²(t) = c₁ J²(s) + c₂ J²(u) + c₃ J(s)J(u) + c₄ J(s) − c₅ J(u)
/// ```
///
/// with the harness coefficients over (1+2u−2s)(u−s); exactly zero on
/// the [0, K−6]² block for all s ≤ t ≤ u.
pub fn quadratic_variance_matrix_identity(
    a: &Rat,
    b: &Rat,
    c: &Rat,
    s: &Rat,
    t: &Rat,
    u: &Rat,
    k: usize,
) -> Result<Rat> {
    if k < 6 {
        return Err(Error::Argument("identity check needs K >= 6".into()));
    }
    if !(s <= t && t <= u && s < u) {
        return Err(Error::Argument("need s <= t <= u with s < u".into()));
    }
    let jt = jacobi_matrices(a, b, c, k)?;
    let js = jacobi_at(&jt, s);
    let jtm = jacobi_at(&jt, t);
    let ju = jacobi_at(&jt, u);
    let two = rint(2);
    let four = rint(4);
    let denom = (Rat::one() + &two * u - &two * s) * (u - s);
    let c1 = (Rat::one() + &two * u - &two * t) * (u - t) / &denom;
    let c2 = (Rat::one() + &two * t - &two * s) * (t - s) / &denom;
    let c3 = &four * (t - s) * (u - t) / &denom;
    let c4 = &four * u * (t - s) * (u - t) / &denom;
    let c5 = &four * s * (t - s) * (u - t) / &denom;
    let js2 = mat_mul(&js, &js);
    let jt2 = mat_mul(&jtm, &jtm);
    let ju2 = mat_mul(&ju, &ju);
    let jsju = mat_mul(&js, &ju);
    let residual = mat_lin(&[
        (Rat::one(), &jt2),
        (-c1, &js2),
        (-c2, &ju2),
        (-c3, &jsju),
        (-c4, &js),
        (c5, &ju),
    ]);
    Ok(interior_max_abs(&residual, 5))
}

/// Exact residual of the harness linearity J(t) = ((u−t)J(s) + (t−s)J(u))/(u−s).
pub fn harness_linearity_residual(
    a: &Rat,
    b: &Rat,
    c: &Rat,
    s: &Rat,
    t: &Rat,
    u: &Rat,
    k: usize,
) -> Result<Rat> {
    if !(s < u) {
        return Err(Error::Argument("need s < u".into()));
    }
    let jt = jacobi_matrices(a, b, c, k)?;
    let js = jacobi_at(&jt, s);
    let jtm = jacobi_at(&jt, t);
    let ju = jacobi_at(&jt, u);
    let denom = u - s;
    let residual = mat_lin(&[
        (Rat::one(), &jtm),
        (-((u - t) / &denom), &js),
        (-((t - s) / &denom), &ju),
    ]);
    Ok(interior_max_abs(&residual, 0))
}

// ---------------------------------------------------------------------
// Conditional moment evaluators
// ---------------------------------------------------------------------

/// Two-sided conditional variance of the standard-form process:
/// V[X_t | X_s, X_u] for s < t < u.
pub fn conditional_variance_formula(
    x_s: f64,
    x_u: f64,
    s: f64,
    t: f64,
    u: f64,
    hp: &HarnessParams,
) -> Result<f64> {
    if !(s <= t && t <= u && s < u) {
        return Err(Error::Argument(format!(
            "need s <= t <= u with s < u, got ({s}, {t}, {u})"
        )));
    }
    let span = u - s;
    let bridge = 1.0
        + hp.eta * (u * x_s - s * x_u) / span
        + hp.theta * (x_u - x_s) / span
        + ((x_u - x_s) / span).powi(2);
    Ok((u - t) * (t - s) / (1.0 + span) * bridge)
}

/// Conditional mean and variance of the shifted process Y_t = T_t + t²
/// given (Y_s, Y_u); the variance is cross-checked at runtime against
/// its expanded second-moment form.
pub fn y_conditional_formulas(
    y_s: f64,
    y_u: f64,
    s: f64,
    t: f64,
    u: f64,
) -> Result<(f64, f64)> {
    if !(s <= t && t <= u && s < u) {
        return Err(Error::Argument(format!(
            "need s <= t <= u with s < u, got ({s}, {t}, {u})"
        )));
    }
    let span = u - s;
    let mean = ((u - t) * y_s + (t - s) * y_u) / span;
    let var = (u - t) * (t - s) / (1.0 + 2.0 * span)
        * (4.0 * (u * y_s - s * y_u) / span + ((y_u - y_s) / span).powi(2));
    // expanded second-moment form of the same identity
    let denom = (1.0 + 2.0 * span) * span;
    let second = (1.0 + 2.0 * u - 2.0 * t) * (u - t) / denom * y_s * y_s
        + (1.0 + 2.0 * t - 2.0 * s) * (t - s) / denom * y_u * y_u
        + 4.0 * (t - s) * (u - t) / denom * y_s * y_u
        + 4.0 * u * (t - s) * (u - t) / denom * y_s
        - 4.0 * s * (t - s) * (u - t) / denom * y_u;
    let var_expanded = second - mean * mean;
    let scale = var.abs().max(second.abs()).max(1.0);
    if (var - var_expanded).abs() > 1e-9 * scale {
        return Err(Error::Domain(format!(
            "conditional variance routes disagree: {var} vs {var_expanded}"
        )));
    }
    Ok((mean, var))
}

/// Recurrence coefficients of the shifted family computed through the
/// base-family shift rule (the second route of the consistency check):
/// b_n(t) = A_n + C_n − (C−t)² + t², c_n(t) = A_{n−1}C_n, with the base
/// parameters (C−t, A+t, B+t).
pub fn shift_rule_coeffs(a: &Rat, b: &Rat, c: &Rat, t: &Rat, n: usize) -> (Rat, Rat) {
    let base_a = |m: usize| -> Rat {
        // A_m = (m + (C−t) + (A+t))(m + (C−t) + (B+t)) = (m+A+C)(m+B+C)
        let mr = rint(m as i64);
        (&mr + a + c) * (&mr + b + c)
    };
    let base_c = |m: usize| -> Rat {
        // C_m = m(m−1 + (A+t) + (B+t)) = m(m−1+A+B+2t)
        let mr = rint(m as i64);
        &mr * (&mr - Rat::one() + a + b + rint(2) * t)
    };
    let alpha_sq = (c - t) * (c - t);
    let b_n = base_a(n) + base_c(n) - alpha_sq + t * t;
    let c_n = if n == 0 {
        Rat::zero()
    } else {
        base_a(n - 1) * base_c(n)
    };
    (b_n, c_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num::ToPrimitive;
    use rand::{Rng, SeedableRng};

    fn abc123() -> (Rat, Rat, Rat) {
        (rint(1), rint(2), rint(3))
    }

    #[test]
    fn coefficient_examples() {
        let (a, b, c) = abc123();
        assert_eq!(alpha_coeff(&a, &b, &c, 0), rint(11));
        assert_eq!(beta_coeff(&c, 0), rint(6));
        assert_eq!(gamma_coeff(&a, &b, &c, 0), Rat::zero());
        assert_eq!(delta_coeff(&a, &b, &c, 0), Rat::zero());
        assert_eq!(delta_coeff(&a, &b, &c, 1), rint(40));
    }

    #[test]
    fn commutator_entry_00() {
        // (XY−YX)₀₀ = δ₁ = 2(A+C)(B+C) and (½X²+2Y)₀₀ = 2C² + 2(AB+AC+BC)
        let (a, b, c) = abc123();
        let jt = jacobi_matrices(&a, &b, &c, 6).unwrap();
        let xy = mat_mul(&jt.x, &jt.y);
        let yx = mat_mul(&jt.y, &jt.x);
        assert_eq!(&xy[0][0] - &yx[0][0], rint(40));
        let xx = mat_mul(&jt.x, &jt.x);
        assert_eq!(rat(1, 2) * &xx[0][0] + rint(2) * &jt.y[0][0], rint(40));
    }

    #[test]
    fn commutator_exactly_zero() {
        let (a, b, c) = abc123();
        let jt = jacobi_matrices(&a, &b, &c, 12).unwrap();
        assert!(commutator_residual(&jt).is_zero());
    }

    #[test]
    fn commutator_needs_quadratic_alpha_term() {
        // dropping the 2n² from α_n breaks the identity
        let (a, b, c) = abc123();
        let mut jt = jacobi_matrices(&a, &b, &c, 12).unwrap();
        for n in 0..jt.k {
            jt.y[n][n] = &jt.y[n][n] - rint(2 * (n as i64) * (n as i64));
        }
        assert!(!commutator_residual(&jt).is_zero());
    }

    #[test]
    fn commutator_random_rational_triples() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        for _ in 0..100 {
            let a = rat(rng.gen_range(-8..8), rng.gen_range(1..5));
            let b = rat(rng.gen_range(-8..8), rng.gen_range(1..5));
            let c = rat(rng.gen_range(-8..8), rng.gen_range(1..5));
            let jt = jacobi_matrices(&a, &b, &c, 16).unwrap();
            assert!(commutator_residual(&jt).is_zero(), "failed at {a} {b} {c}");
        }
    }

    #[test]
    fn quadratic_variance_identity_examples() {
        let (a, b, c) = abc123();
        // degenerate collapse t = s
        let r =
            quadratic_variance_matrix_identity(&a, &b, &c, &rint(0), &rint(0), &rint(2), 8)
                .unwrap();
        assert!(r.is_zero());
        let r =
            quadratic_variance_matrix_identity(&a, &b, &c, &rint(0), &rint(1), &rint(2), 14)
                .unwrap();
        assert!(r.is_zero());
        assert!(
            quadratic_variance_matrix_identity(&a, &b, &c, &rint(2), &rint(1), &rint(0), 14)
                .is_err()
        );
    }

    #[test]
    fn quadratic_variance_identity_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let a = rat(rng.gen_range(-6..6), rng.gen_range(1..4));
            let b = rat(rng.gen_range(-6..6), rng.gen_range(1..4));
            let c = rat(rng.gen_range(-6..6), rng.gen_range(1..4));
            let s = rat(rng.gen_range(-6..6), rng.gen_range(1..4));
            let t = &s + rat(rng.gen_range(1..6), rng.gen_range(1..4));
            let u = &t + rat(rng.gen_range(1..6), rng.gen_range(1..4));
            let r = quadratic_variance_matrix_identity(&a, &b, &c, &s, &t, &u, 14).unwrap();
            assert!(r.is_zero(), "failed at ({a},{b},{c};{s},{t},{u})");
        }
    }

    #[test]
    fn harness_linearity_exact() {
        let (a, b, c) = abc123();
        let r = harness_linearity_residual(&a, &b, &c, &rat(-1, 2), &rat(3, 4), &rint(2), 10)
            .unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn parameter_map_examples() {
        let m = parameter_maps(&HarnessParams { eta: 1.0, theta: 2.0 }).unwrap();
        assert_eq!(m, MarginalSums::RealPair { ac: 1.0, bc: 1.0 });

        let hp = inverse_parameter_maps(&MarginalSums::RealPair { ac: 1.0, bc: 4.0 }).unwrap();
        assert_relative_eq!(hp.eta, 0.5, max_relative = 1e-15);
        assert_relative_eq!(hp.theta, 2.5, max_relative = 1e-15);
        match parameter_maps(&hp).unwrap() {
            MarginalSums::RealPair { ac, bc } => {
                assert_relative_eq!(ac, 1.0, max_relative = 1e-12);
                assert_relative_eq!(bc, 4.0, max_relative = 1e-12);
            }
            other => panic!("expected real pair, got {other:?}"),
        }

        match parameter_maps(&HarnessParams { eta: 1.0, theta: 0.0 }).unwrap() {
            MarginalSums::ConjugatePair { re, im } => {
                assert_eq!(re, 0.0);
                assert_relative_eq!(im, 1.0, max_relative = 1e-15);
                assert_relative_eq!(re * re + im * im, 1.0, max_relative = 1e-15);
            }
            other => panic!("expected conjugate pair, got {other:?}"),
        }

        assert!(parameter_maps(&HarnessParams { eta: 1.0, theta: -2.0 }).is_err());
    }

    #[test]
    fn parameter_map_round_trip() {
        for (eta, theta) in [(0.3, 2.0), (1.7, 5.5), (0.9, 0.4), (2.0, -1.5)] {
            let hp = HarnessParams { eta, theta };
            let back = inverse_parameter_maps(&parameter_maps(&hp).unwrap()).unwrap();
            assert_relative_eq!(back.eta, eta, max_relative = 1e-14);
            assert_relative_eq!(back.theta, theta, max_relative = 1e-14);
        }
    }

    #[test]
    fn conditional_variance_example() {
        // (s,t,u) = (0,1,2), x_s = 0, x_u = 1, η = 1, θ = 2 → 3/4
        let hp = HarnessParams { eta: 1.0, theta: 2.0 };
        let v = conditional_variance_formula(0.0, 1.0, 0.0, 1.0, 2.0, &hp).unwrap();
        assert_relative_eq!(v, 0.75, max_relative = 1e-15);
        // collapses at both endpoints
        assert_eq!(
            conditional_variance_formula(0.3, 1.2, 0.0, 0.0, 2.0, &hp).unwrap(),
            0.0
        );
        assert_eq!(
            conditional_variance_formula(0.3, 1.2, 0.0, 2.0, 2.0, &hp).unwrap(),
            0.0
        );
    }

    #[test]
    fn y_conditional_examples() {
        // constant bridge: mean is the constant
        let (mean, _) = y_conditional_formulas(5.5, 5.5, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(mean, 5.5, max_relative = 1e-15);
        // weights (u−t)/(u−s), (t−s)/(u−s)
        let (mean, var) = y_conditional_formulas(1.0, 3.0, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(mean, 2.0, max_relative = 1e-15);
        let span: f64 = 2.0;
        let expect = 1.0 / (1.0 + 2.0 * span) * (4.0 * (2.0 * 1.0 - 0.0) / span + 1.0);
        assert_relative_eq!(var, expect, max_relative = 1e-12);
    }

    #[test]
    fn shift_rule_consistency_exact() {
        // the time-linear coefficients equal the shift-rule coefficients
        // exactly, as rationals, for every degree and rational time
        let (a, b, c) = abc123();
        for t in [rat(-1, 2), rint(0), rat(7, 3)] {
            for n in 0..=12 {
                let b_direct = alpha_coeff(&a, &b, &c, n) + beta_coeff(&c, n) * &t;
                let c_direct =
                    gamma_coeff(&a, &b, &c, n) + delta_coeff(&a, &b, &c, n) * &t;
                let (b_shift, c_shift) = shift_rule_coeffs(&a, &b, &c, &t, n);
                assert_eq!(b_direct, b_shift, "b_{n} at t={t}");
                assert_eq!(c_direct, c_shift, "c_{n} at t={t}");
            }
        }
    }

    #[test]
    fn float_coeffs_match_rational_truncation() {
        // the f64 recurrence used by quadrature agrees with the exact one
        let pp = crate::measure::ProcessParams::new_real(1.0, 2.0, 3.0).unwrap();
        let (a, b, c) = abc123();
        let t = rat(1, 2);
        let params = crate::measure::marginal_params(&pp, 0.5);
        for n in 0..6 {
            let (b_shift, c_shift) = shift_rule_coeffs(&a, &b, &c, &t, n);
            // shift by −t² relates the Y family back to the T family
            let b_t = crate::poly::jacobi_diag(&params, n);
            let expect_b = b_t + 0.25;
            assert_relative_eq!(b_shift.to_f64().unwrap(), expect_b, max_relative = 1e-13);
            if n >= 1 {
                let c_t = crate::poly::jacobi_offdiag_product(&params, n);
                assert_relative_eq!(c_shift.to_f64().unwrap(), c_t, max_relative = 1e-13);
            }
        }
    }
}
