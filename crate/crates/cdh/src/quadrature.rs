//! Gauss quadrature rules generated from the Jacobi matrices of the
//! recurrence, and the verification operations built on them:
//! orthogonality, martingale polynomials, and both Chapman–Kolmogorov
//! equations.
//!
//! All the verifications integrate polynomials, so Gauss rules give them
//! exactly (up to rounding): the checks isolate the algebraic structure
//! from integration error. Moments of a kernel are polynomials in the
//! starting point, which is what lets the nested checks use the Jacobi
//! matrix continuation `e₀ᵀ J(y)ᵏ e₀` at quadrature nodes that fall off
//! the (possibly atomic) support.

use nalgebra::DMatrix;

use crate::measure::{self, MeasureKind, MixedMeasure, ProcessParams};
use crate::poly::{self, CdhParams, FavardClass};
use crate::{Error, Result};

/// Nodes and weights exact for polynomials up to `exact_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `usize::MAX` when the rule *is* the (finitely atomic) measure.
    pub exact_degree: usize,
}

impl QuadratureRule {
    fn single(node: f64) -> Self {
        Self {
            nodes: vec![node],
            weights: vec![1.0],
            exact_degree: usize::MAX,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.integrate(|x| x.powi(k as i32))
    }
}

/// Gauss rule from the symmetric tridiagonalization of the Jacobi matrix:
/// b_n on the diagonal, √(A_{n−1}C_n) off it; nodes are eigenvalues and
/// each weight is the squared first eigenvector component.
pub fn golub_welsch(p: &CdhParams, k: usize) -> Result<QuadratureRule> {
    if k == 0 {
        return Err(Error::Argument("rule size must be positive".into()));
    }
    let class = poly::favard_classify(p, k.max(400));
    match class {
        FavardClass::InfiniteSupport => {}
        FavardClass::FiniteAtoms(n) => {
            if k != n {
                return Err(Error::Argument(format!(
                    "measure has exactly {n} atoms; rule size must be {n}, got {k}"
                )));
            }
        }
        FavardClass::NotOrthogonal(j) => {
            return Err(Error::Domain(format!(
                "no orthogonality measure (first bad product at index {j})"
            )))
        }
    }
    if k == 1 {
        let mut rule = QuadratureRule::single(poly::jacobi_diag(p, 0));
        if class == FavardClass::InfiniteSupport {
            rule.exact_degree = 1;
        }
        return Ok(rule);
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    for n in 0..k {
        m[(n, n)] = poly::jacobi_diag(p, n);
        if n >= 1 {
            let prod = poly::jacobi_offdiag_product(p, n);
            if prod < 0.0 {
                return Err(Error::Domain(format!(
                    "off-diagonal product A_{}C_{} = {prod} is negative",
                    n - 1,
                    n
                )));
            }
            let e = prod.sqrt();
            m[(n - 1, n)] = e;
            m[(n, n - 1)] = e;
        }
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        exact_degree: if class == FavardClass::InfiniteSupport {
            2 * k - 1
        } else {
            usize::MAX
        },
    })
}

/// Moment e₀ᵀ Jᵏ e₀ of the family, by tridiagonal matrix powers. For a
/// parameter set whose measure exists this is the k-th moment; for any
/// other parameters it is the polynomial continuation in the parameters.
pub fn jacobi_moment(p: &CdhParams, k: usize) -> f64 {
    let size = k / 2 + 2;
    let mut v = vec![0.0; size + 1];
    let mut next = vec![0.0; size + 1];
    v[0] = 1.0;
    for _ in 0..k {
        for i in 0..size {
            let below = if i > 0 { v[i - 1] } else { 0.0 };
            next[i] = below + poly::jacobi_diag(p, i) * v[i]
                + poly::jacobi_offdiag_product(p, i + 1) * v[i + 1];
        }
        std::mem::swap(&mut v, &mut next);
    }
    v[0]
}

/// A quadrature rule for the transition kernel from (s, x), honoring the
/// kernel's classification (without computing atom masses).
pub fn kernel_rule(c: f64, s: f64, t: f64, x: f64, k: usize) -> Result<QuadratureRule> {
    if !(s < t) {
        return Err(Error::Argument(format!("need s < t, got s={s}, t={t}")));
    }
    if !measure::state_space_contains(c, s, x) {
        return Ok(QuadratureRule::single(measure::state_space_boundary(c, t)));
    }
    let boundary = measure::state_space_boundary(c, s);
    if (x - boundary).abs() <= 1e-12 * boundary.abs().max(1.0) {
        return Ok(QuadratureRule::single(measure::state_space_boundary(c, t)));
    }
    let params = measure::kernel_params(c, s, t, x);
    if s > c && x < 0.0 {
        let n = (s - c - (-x).sqrt()).round() as usize;
        return golub_welsch(&params, n + 1);
    }
    golub_welsch(&params, k)
}

/// A quadrature rule for the marginal law at time t.
pub fn marginal_rule(pp: &ProcessParams, t: f64, k: usize) -> Result<QuadratureRule> {
    let tau = pp.tau();
    if t < tau - 1e-12 * tau.abs().max(1.0) {
        return Err(Error::Argument(format!("need t >= tau = {tau}")));
    }
    if (t - tau).abs() <= 1e-12 * tau.abs().max(1.0) {
        return Ok(QuadratureRule::single(pp.degenerate_point()));
    }
    golub_welsch(&measure::marginal_params(pp, t), k)
}

/// A rule matching an already classified measure.
pub fn rule_for_measure(m: &MixedMeasure, k: usize) -> Result<QuadratureRule> {
    match m.kind() {
        MeasureKind::Degenerate => Ok(QuadratureRule::single(m.point().unwrap())),
        MeasureKind::FiniteAtomic => Ok(QuadratureRule {
            nodes: m.atoms().iter().map(|a| a.location).collect(),
            weights: m.atoms().iter().map(|a| a.mass).collect(),
            exact_degree: usize::MAX,
        }),
        MeasureKind::Mixed => match m.source_params() {
            Some(p) => golub_welsch(p, k),
            None => Err(Error::Domain(
                "measure carries no recurrence family (entrance law)".into(),
            )),
        },
    }
}

/// Default margin beyond the minimum rule size needed for a given
/// polynomial degree.
fn rule_size_for_degree(degree: usize) -> usize {
    degree / 2 + 1 + 4
}

/// Worst relative residual of the Gram matrix ∫ pₙ pₘ dν against
/// δₙₘ ∏ βⱼ over 0 ≤ m, n ≤ n_max.
pub fn verify_orthogonality(p: &CdhParams, n_max: usize) -> Result<f64> {
    let class = poly::favard_classify(p, 400);
    let k = match class {
        FavardClass::InfiniteSupport => rule_size_for_degree(2 * n_max),
        FavardClass::FiniteAtoms(n) => n,
        FavardClass::NotOrthogonal(j) => {
            return Err(Error::Domain(format!(
                "family not orthogonal (first bad product at {j})"
            )))
        }
    };
    let rule = golub_welsch(p, k)?;
    let mut values = vec![vec![0.0; rule.len()]; n_max + 1];
    for (i, &x) in rule.nodes.iter().enumerate() {
        for (n, row) in values.iter_mut().enumerate() {
            row[i] = poly::eval_poly(p, n, x)?;
        }
    }
    let mut norms = vec![1.0_f64; n_max + 1];
    for n in 1..=n_max {
        norms[n] = norms[n - 1] * poly::jacobi_offdiag_product(p, n).max(0.0);
    }
    let mut worst = 0.0_f64;
    for n in 0..=n_max {
        for m in 0..=n {
            let gram: f64 = rule
                .weights
                .iter()
                .enumerate()
                .map(|(i, &w)| w * values[n][i] * values[m][i])
                .sum();
            let target = if m == n { norms[n] } else { 0.0 };
            let scale = (norms[n] * norms[m]).sqrt().max(1.0);
            worst = worst.max((gram - target).abs() / scale);
        }
    }
    Ok(worst)
}

/// Worst residual of the martingale property
/// ∫ pₙ(y; t) 𝔭_{s,t}(x, dy) = pₙ(x; s) for n ≤ n_max.
///
/// Rejected outside E_s: the kernel polynomials stop being orthogonal
/// there and the identity is not claimed.
pub fn verify_martingale(
    pp: &ProcessParams,
    s: f64,
    t: f64,
    x: f64,
    n_max: usize,
) -> Result<f64> {
    if !(s < t) {
        return Err(Error::Argument(format!("need s < t, got s={s}, t={t}")));
    }
    if !measure::state_space_contains(pp.c(), s, x) {
        return Err(Error::Argument(format!(
            "x = {x} is outside the state space E_s; the martingale identity is only asserted on E_s"
        )));
    }
    let rule = kernel_rule(pp.c(), s, t, x, rule_size_for_degree(n_max))?;
    let family_t = measure::marginal_params(pp, t);
    let family_s = measure::marginal_params(pp, s);
    let mut worst = 0.0_f64;
    for n in 0..=n_max {
        let lhs = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .try_fold(0.0, |acc, (&y, &w)| {
                Ok::<f64, Error>(acc + w * poly::eval_poly(&family_t, n, y)?)
            })?;
        let rhs = poly::eval_poly(&family_s, n, x)?;
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(worst)
}

/// Moments of the kernel from (s, x) at time t, as the measure dictates:
/// the deterministic branch off E_s, the Jacobi continuation on it.
fn kernel_moment(c: f64, s: f64, t: f64, x: f64, k: usize) -> f64 {
    if !measure::state_space_contains(c, s, x) {
        return measure::state_space_boundary(c, t).powi(k as i32);
    }
    jacobi_moment(&measure::kernel_params(c, s, t, x), k)
}

/// Worst relative residual over moments k ≤ degree of the
/// Chapman–Kolmogorov composition 𝔭_{s,t} ∘ 𝔭_{t,u} = 𝔭_{s,u}.
pub fn verify_chapman_kolmogorov(
    c: f64,
    s: f64,
    t: f64,
    u: f64,
    x: f64,
    degree: usize,
) -> Result<f64> {
    if !(s < t && t < u) {
        return Err(Error::Argument(format!(
            "need s < t < u, got ({s}, {t}, {u})"
        )));
    }
    let outer = kernel_rule(c, s, t, x, rule_size_for_degree(degree))?;
    let mut worst = 0.0_f64;
    for k in 0..=degree {
        // The inner integrand must be the Jacobi continuation even at
        // nodes that sit off E_t: the outer measure lives on E_t, and a
        // Gauss node only approaches an atom without landing on it.
        let lhs = outer.integrate(|y| jacobi_moment(&measure::kernel_params(c, t, u, y), k));
        let rhs = kernel_moment(c, s, u, x, k);
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(worst)
}

/// Worst relative residual over moments k ≤ degree of the marginal
/// evolution ∫ 𝔭_s(dx) 𝔭_{s,t}(x, ·) = 𝔭_t.
pub fn verify_marginal_evolution(
    pp: &ProcessParams,
    s: f64,
    t: f64,
    degree: usize,
) -> Result<f64> {
    if !(s < t) {
        return Err(Error::Argument(format!("need s < t, got s={s}, t={t}")));
    }
    let outer = marginal_rule(pp, s, rule_size_for_degree(degree))?;
    let family_t = measure::marginal_params(pp, t);
    let mut worst = 0.0_f64;
    for k in 0..=degree {
        // Marginal mass sits inside E_s; a node can fall outside only by
        // rounding near an atom, where the Jacobi continuation is still
        // the right integrand value.
        let lhs =
            outer.integrate(|y| jacobi_moment(&measure::kernel_params(pp.c(), s, t, y), k));
        let rhs = jacobi_moment(&family_t, k);
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p123() -> CdhParams {
        CdhParams::new_real(1.0, 2.0, 3.0)
    }

    #[test]
    fn degenerate_marginal_rule() {
        let pp = ProcessParams::new_real(1.0, 3.0, 2.0).unwrap();
        let rule = marginal_rule(&pp, -2.0, 1).unwrap();
        assert_eq!(rule.nodes, vec![-1.0]);
        assert_eq!(rule.weights, vec![1.0]);
    }

    #[test]
    fn orthogonality_to_constants() {
        for k in [1usize, 4, 9] {
            let rule = golub_welsch(&p123(), k).unwrap();
            let integral = rule.integrate(|x| poly::eval_poly(&p123(), 1, x).unwrap());
            assert!(integral.abs() < 1e-9 * 12.0, "K={k}: {integral}");
        }
    }

    #[test]
    fn finite_atomic_kernel_nodes_are_atoms() {
        let params = measure::kernel_params(0.0, 2.0, 3.0, -1.0);
        let rule = golub_welsch(&params, 2).unwrap();
        assert_relative_eq!(rule.nodes[0], -9.0, max_relative = 1e-10);
        assert_relative_eq!(rule.nodes[1], -4.0, max_relative = 1e-10);
        assert!(golub_welsch(&params, 3).is_err());
    }

    #[test]
    fn rule_moments_match_jacobi_powers() {
        for p in [p123(), CdhParams::new_conjugate(0.5, 1.0, 2.0)] {
            for k_rule in [6usize, 11] {
                let rule = golub_welsch(&p, k_rule).unwrap();
                for k in 0..=(2 * k_rule - 1).min(14) {
                    let via_rule = rule.moment(k);
                    let via_jacobi = jacobi_moment(&p, k);
                    assert_relative_eq!(via_rule, via_jacobi, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn rule_consistency_across_sizes() {
        let p = p123();
        let small = golub_welsch(&p, 7).unwrap();
        let large = golub_welsch(&p, 12).unwrap();
        for k in 0..=13 {
            assert_relative_eq!(small.moment(k), large.moment(k), max_relative = 1e-11);
        }
    }

    #[test]
    fn weights_positive_nodes_sorted() {
        let grid = [
            p123(),
            CdhParams::new_real(0.5, 0.5, 0.5),
            CdhParams::new_conjugate(1.0, 1.0, 2.0),
            CdhParams::new_real(1.0, -0.999, 2.0),
            measure::kernel_params(2.0, 0.5, 4.0, 0.7),
        ];
        for p in grid {
            let rule = golub_welsch(&p, 10).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn orthogonality_gram_values() {
        // ∫ p₁² dν = A₀C₁ = 60 for (1,2,3)
        let rule = golub_welsch(&p123(), 6).unwrap();
        let gram = rule.integrate(|x| {
            let v = poly::eval_poly(&p123(), 1, x).unwrap();
            v * v
        });
        assert_relative_eq!(gram, 60.0, max_relative = 1e-11);
        assert!(verify_orthogonality(&p123(), 8).unwrap() < 1e-9);
    }

    #[test]
    fn orthogonality_on_finite_atomic_family() {
        let params = measure::kernel_params(0.0, 2.0, 3.0, -1.0);
        assert!(verify_orthogonality(&params, 5).unwrap() < 1e-10);
    }

    #[test]
    fn martingale_mean_example() {
        // kernel mean from (s,x)=(0,0) to t=1 with C=3 is 5, and
        // p₁(5; 1) = −11 = p₁(0; 0)
        let pp = ProcessParams::new_real(1.0, 2.0, 3.0).unwrap();
        let rule = kernel_rule(3.0, 0.0, 1.0, 0.0, 8).unwrap();
        assert_relative_eq!(rule.moment(1), 5.0, max_relative = 1e-11);
        let fam1 = measure::marginal_params(&pp, 1.0);
        assert_eq!(poly::eval_poly(&fam1, 1, 5.0).unwrap(), -11.0);
        assert!(verify_martingale(&pp, 0.0, 1.0, 0.0, 8).unwrap() < 1e-8);
    }

    #[test]
    fn martingale_grid_including_atomic_kernels() {
        let cases = [
            (ProcessParams::new_real(1.0, 2.0, 3.0).unwrap(), 0.0, 1.0, 0.5),
            (ProcessParams::new_real(1.0, 2.0, 3.0).unwrap(), 0.5, 2.0, -1.0),
            (ProcessParams::new_real(0.5, 4.0, 0.0).unwrap(), 2.0, 3.0, -1.0),
            (ProcessParams::new_conjugate(1.0, 2.0, 0.5).unwrap(), 0.0, 2.0, 1.5),
            (ProcessParams::new_real(-0.5, 2.0, 1.0).unwrap(), 0.0, 0.7, -0.25),
        ];
        for (pp, s, t, x) in cases {
            assert!(measure::state_space_contains(pp.c(), s, x));
            let r = verify_martingale(&pp, s, t, x, 8).unwrap();
            assert!(r < 1e-8, "martingale residual {r} at ({s},{t},{x})");
        }
    }

    #[test]
    fn martingale_rejects_outside_state_space() {
        let pp = ProcessParams::new_real(1.0, 2.0, 3.0).unwrap();
        assert!(matches!(
            verify_martingale(&pp, 0.0, 1.0, -25.0, 4),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        // degree 0: both sides are probability measures (up to
        // eigensolver rounding in the weights)
        assert!(verify_chapman_kolmogorov(2.0, 0.0, 1.0, 2.0, 1.0, 0).unwrap() < 1e-12);
        // boundary start: both sides ride the parabola
        let r = verify_chapman_kolmogorov(2.0, 0.0, 1.0, 2.0, -4.0, 6).unwrap();
        assert!(r < 1e-12, "boundary residual {r}");
        // interior start
        let r = verify_chapman_kolmogorov(2.0, 0.0, 1.0, 2.0, 1.0, 8).unwrap();
        assert!(r < 1e-8, "interior residual {r}");
        // off the state space: deterministic on both sides
        let r = verify_chapman_kolmogorov(2.0, 0.0, 1.0, 2.0, -9.0, 8).unwrap();
        assert!(r < 1e-12, "off-space residual {r}");
        // finite atomic branch (s > C)
        let r = verify_chapman_kolmogorov(0.0, 2.0, 3.0, 4.5, -1.0, 8).unwrap();
        assert!(r < 1e-8, "atomic residual {r}");
    }

    #[test]
    fn chapman_rejects_bad_ordering() {
        assert!(verify_chapman_kolmogorov(2.0, 0.0, 2.0, 1.0, 0.5, 4).is_err());
    }

    #[test]
    fn marginal_evolution_examples() {
        let pp = ProcessParams::new_real(1.0, 2.0, 3.0).unwrap();
        assert!(verify_marginal_evolution(&pp, 0.0, 1.0, 0).unwrap() < 1e-12);
        let r = verify_marginal_evolution(&pp, 0.0, 1.0, 8).unwrap();
        assert!(r < 1e-8, "residual {r}");
        // degenerate start s = τ
        let r = verify_marginal_evolution(&pp, pp.tau(), 0.5, 8).unwrap();
        assert!(r < 1e-8, "tau-start residual {r}");
        // atom-bearing marginal as the outer measure
        let pp = ProcessParams::new_real(-0.5, 2.0, 1.0).unwrap();
        let r = verify_marginal_evolution(&pp, 0.0, 0.8, 8).unwrap();
        assert!(r < 1e-8, "atom-case residual {r}");
    }

    #[test]
    fn density_cross_validation() {
        // rule total mass minus closed-form atom mass = adaptive density mass
        let pp = ProcessParams::new_real(-0.5, 2.0, 1.0).unwrap();
        let m = measure::marginal_law(&pp, 0.0).unwrap();
        let rule = marginal_rule(&pp, 0.0, 12).unwrap();
        let lhs = rule.weights.iter().sum::<f64>() - m.atom_mass_total();
        assert_relative_eq!(lhs, m.continuous_mass().unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn short_time_kernel_mean_approaches_start() {
        let c = 3.0;
        let x = 1.3;
        let mut gaps = Vec::new();
        for eps in [1e-2, 1e-3] {
            let rule = kernel_rule(c, 0.5, 0.5 + eps, x, 6).unwrap();
            gaps.push((rule.moment(1) - x).abs());
        }
        // mean gap is O(ε): one decade in ε buys one decade in the gap
        assert!(gaps[1] < 0.15 * gaps[0]);
        // linear-in-ε extrapolation recovers x up to the quadratic
        // clock term −ε² + 2sε·0, i.e. 1e-5 at these ε
        let m1 = kernel_rule(c, 0.5, 0.51, x, 6).unwrap().moment(1);
        let m2 = kernel_rule(c, 0.5, 0.501, x, 6).unwrap().moment(1);
        assert!(((10.0 * m2 - m1) / 9.0 - x).abs() < 2e-5);
    }
}
