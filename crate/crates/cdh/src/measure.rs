//! Orthogonality measures of the polynomial family, classified and made
//! computable: Markov transition kernels, marginal laws, and σ-finite
//! entrance laws.
//!
//! Every measure is a [`MixedMeasure`]: a degenerate point, a finite set
//! of atoms, or a continuous density on (0, ∞) plus finitely many atoms
//! on the negative axis. Densities are assembled in log space from the
//! complex gamma kit; atom masses come either from closed forms or from
//! the Christoffel-sum oracle 1/Σ p̃ₙ(x₀)².

use std::sync::OnceLock;

use crate::poly::{self, CdhParams, FavardClass, PairKind};
use crate::special::{ln_abs_gamma_sq, ln_abs_gamma_sq_imag, ln_gamma_real, pochhammer};
use crate::{Error, Result};

/// Absolute tolerance for matching a coordinate against an atom location.
pub const ATOM_TOL: f64 = 1e-9;

/// Tolerance (relative to scale) for the exact degeneracy predicates
/// (state-space boundary, t = τ).
const DEGENERATE_TOL: f64 = 1e-12;

/// Default depth of the truncated Christoffel sums for measures with
/// infinite support. Deeper is not better: the forward recurrence picks
/// up a coherent growing-solution contamination past n ≈ 3·10⁴ that
/// biases the tail fit faster than the model error shrinks.
pub const CHRISTOFFEL_TRUNCATION: usize = 20_000;

const LN_4PI: f64 = 2.531_024_246_969_291;

// ---------------------------------------------------------------------
// Process parameters
// ---------------------------------------------------------------------

/// The (A, B) parameter pair of the process: two reals with B ≥ A, or a
/// conjugate pair re ∓ i·im.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbPair {
    Real { a: f64, b: f64 },
    Conjugate { re: f64, im: f64 },
}

/// Parameters (A, B, C) of the Markov process, validated at construction:
/// either all real with A+C > 0 and B ≥ A, or B = conj(A) with im A ≠ 0
/// and C real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pair: AbPair,
    c: f64,
}

impl ProcessParams {
    pub fn new_real(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Argument("non-finite process parameters".into()));
        }
        if b < a {
            return Err(Error::Argument(format!("need B >= A, got A={a}, B={b}")));
        }
        if a + c <= 0.0 {
            return Err(Error::Argument(format!("need A+C > 0, got {}", a + c)));
        }
        Ok(Self {
            pair: AbPair::Real { a, b },
            c,
        })
    }

    /// A, B = re ∓ i·im with im ≠ 0.
    pub fn new_conjugate(re: f64, im: f64, c: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite() && c.is_finite()) {
            return Err(Error::Argument("non-finite process parameters".into()));
        }
        if im == 0.0 {
            return Err(Error::Argument("conjugate pair needs im(A) != 0".into()));
        }
        Ok(Self {
            pair: AbPair::Conjugate { re, im },
            c,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn pair(&self) -> AbPair {
        self.pair
    }

    pub fn is_real(&self) -> bool {
        matches!(self.pair, AbPair::Real { .. })
    }

    /// A + B (real in both regimes).
    pub fn a_plus_b(&self) -> f64 {
        match self.pair {
            AbPair::Real { a, b } => a + b,
            AbPair::Conjugate { re, .. } => 2.0 * re,
        }
    }

    /// AB (real in both regimes).
    pub fn a_times_b(&self) -> f64 {
        match self.pair {
            AbPair::Real { a, b } => a * b,
            AbPair::Conjugate { re, im } => re * re + im * im,
        }
    }

    /// The first admissible time τ = −(A+B)/2.
    pub fn tau(&self) -> f64 {
        -0.5 * self.a_plus_b()
    }

    /// −(A−B)²/4, the deterministic state at time τ.
    pub fn degenerate_point(&self) -> f64 {
        match self.pair {
            AbPair::Real { a, b } => -0.25 * (a - b) * (a - b),
            AbPair::Conjugate { im, .. } => im * im,
        }
    }

    /// (A+C)(B+C), the scale factor of the variance.
    pub fn variance_factor(&self) -> f64 {
        match self.pair {
            AbPair::Real { a, b } => (a + self.c) * (b + self.c),
            AbPair::Conjugate { re, im } => (re + self.c) * (re + self.c) + im * im,
        }
    }

    /// E\[T_t\] = AB + C(A+B) + 2Ct − t².
    pub fn mean_at(&self, t: f64) -> f64 {
        self.a_times_b() + self.c * self.a_plus_b() + 2.0 * self.c * t - t * t
    }

    /// Var\[T_t\] = (A+C)(B+C)(A+B+2t).
    pub fn variance_at(&self, t: f64) -> f64 {
        self.variance_factor() * (self.a_plus_b() + 2.0 * t)
    }

    /// ∏_{j<k} (A+shift+j)(B+shift+j), real in both regimes.
    fn pair_pochhammer(&self, shift: f64, k: u32) -> f64 {
        let (sum, prod) = (self.a_plus_b(), self.a_times_b());
        (0..k).fold(1.0, |acc, j| {
            let u = shift + j as f64;
            acc * (u * u + sum * u + prod)
        })
    }

    /// ∏_{j<k} (shift+j−A)(shift+j−B), real in both regimes.
    fn pair_pochhammer_reflected(&self, shift: f64, k: u32) -> f64 {
        let (sum, prod) = (self.a_plus_b(), self.a_times_b());
        (0..k).fold(1.0, |acc, j| {
            let u = shift + j as f64;
            acc * (u * u - sum * u + prod)
        })
    }

    /// ln Γ(A+shift) + ln Γ(B+shift), real in both regimes.
    fn pair_ln_gamma(&self, shift: f64) -> Result<f64> {
        match self.pair {
            AbPair::Real { a, b } => Ok(ln_gamma_real(a + shift)? + ln_gamma_real(b + shift)?),
            AbPair::Conjugate { re, im } => ln_abs_gamma_sq(re + shift, im),
        }
    }
}

/// Parameters of the martingale family p_n(·; t): (C−t, A+t, B+t).
pub fn marginal_params(pp: &ProcessParams, t: f64) -> CdhParams {
    match pp.pair {
        AbPair::Real { a, b } => CdhParams::new_real(pp.c - t, a + t, b + t),
        AbPair::Conjugate { re, im } => CdhParams::new_conjugate(pp.c - t, re + t, im),
    }
}

/// Parameters of the kernel family Q_n(·; x, t, s):
/// (C−t, t−s∓i√x) for x ≥ 0 and (C−t, t−s∓√(−x)) for x < 0.
pub fn kernel_params(c: f64, s: f64, t: f64, x: f64) -> CdhParams {
    if x > 0.0 {
        CdhParams::new_conjugate(c - t, t - s, x.sqrt())
    } else if x == 0.0 {
        CdhParams::new_real(c - t, t - s, t - s)
    } else {
        let v = (-x).sqrt();
        CdhParams::new_real(c - t, t - s - v, t - s + v)
    }
}

// ---------------------------------------------------------------------
// Time-dependent state space E_s
// ---------------------------------------------------------------------

/// The boundary −(C−s)² of the state space (its single N = 0 atom when
/// s > C).
pub fn state_space_boundary(c: f64, s: f64) -> f64 {
    -(c - s) * (c - s)
}

/// The isolated points of E_s for s > C: −(C−s+N)² for 0 ≤ N < s−C,
/// listed in increasing order.
pub fn state_space_atoms(c: f64, s: f64) -> Vec<f64> {
    let mut atoms = Vec::new();
    let mut n = 0.0;
    while n < s - c {
        let u = c - s + n;
        atoms.push(-u * u);
        n += 1.0;
    }
    atoms
}

/// Membership test for E_s: the half line [−(C−s)², ∞) when s ≤ C, and
/// the atom set ∪ [0, ∞) when s > C. Atom matching uses an absolute
/// tolerance of 1e-9.
pub fn state_space_contains(c: f64, s: f64, x: f64) -> bool {
    if s <= c {
        x >= state_space_boundary(c, s)
    } else if x >= 0.0 {
        true
    } else {
        state_space_atoms(c, s)
            .iter()
            .any(|&a| (x - a).abs() <= ATOM_TOL)
    }
}

// ---------------------------------------------------------------------
// Mixed measures
// ---------------------------------------------------------------------

/// A point mass of the discrete component.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Degenerate,
    FiniteAtomic,
    Mixed,
}

/// Which gamma product sits in the density numerator.
#[derive(Debug, Clone, Copy, PartialEq)]
enum DensitySpec {
    /// |Γ(α+i√x) Γ(β+i√x) Γ(γ+i√x)|² — kernels and marginal laws.
    ThreeParam(CdhParams),
    /// |Γ(p₁+i√x) Γ(p₂+i√x)|² — entrance laws.
    TwoParam { p1: f64, p2: f64 },
}

/// Continuous component: parameters of the gamma numerator plus the log
/// of the normalizing constant the density is divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParams {
    spec: DensitySpec,
    pub log_normalizer: f64,
}

impl DensityParams {
    /// log of the density at x > 0.
    pub fn ln_density(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!(
                "density is supported on (0, infinity); got x = {x}"
            )));
        }
        let w = x.sqrt();
        // |Γ(2iw)|⁻² = 2w sinh(2πw)/π turns the 1/(√x |Γ(2i√x)|²)
        // prefactor into 2 sinh(2πw)/π, regular at w = 0.
        let two_pi_w = 2.0 * std::f64::consts::PI * w;
        let ln_prefactor =
            two_pi_w + (-(-2.0 * two_pi_w).exp()).ln_1p() - std::f64::consts::PI.ln();
        Ok(self.ln_gamma_numerator(w)? + ln_prefactor - self.log_normalizer)
    }

    fn ln_gamma_numerator(&self, w: f64) -> Result<f64> {
        match self.spec {
            DensitySpec::ThreeParam(p) => {
                let mut total = 0.0;
                for (re, im) in p.as_complex() {
                    total += ln_abs_gamma_sq(re, im + w)?;
                }
                Ok(total)
            }
            DensitySpec::TwoParam { p1, p2 } => {
                Ok(ln_abs_gamma_sq(p1, w)? + ln_abs_gamma_sq(p2, w)?)
            }
        }
    }

    /// log of g(w) = 2w · density(w²), the integrand after the x = w²
    /// substitution.
    fn ln_substituted(&self, w: f64) -> Result<f64> {
        if w <= 0.0 {
            return Err(Error::Domain("substituted integrand needs w > 0".into()));
        }
        Ok(self.ln_density(w * w)? + (2.0 * w).ln())
    }
}

/// A classified orthogonality measure.
#[derive(Debug)]
pub struct MixedMeasure {
    kind: MeasureKind,
    density: Option<DensityParams>,
    atoms: Vec<Atom>,
    normalized: bool,
    source: Option<CdhParams>,
    cdf: OnceLock<ContinuousCdf>,
}

impl Clone for MixedMeasure {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            density: self.density,
            atoms: self.atoms.clone(),
            normalized: self.normalized,
            source: self.source,
            cdf: OnceLock::new(),
        }
    }
}

impl MixedMeasure {
    fn degenerate(point: f64, source: Option<CdhParams>) -> Self {
        Self {
            kind: MeasureKind::Degenerate,
            density: None,
            atoms: vec![Atom {
                location: point,
                mass: 1.0,
            }],
            normalized: true,
            source,
            cdf: OnceLock::new(),
        }
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn density(&self) -> Option<&DensityParams> {
        self.density.as_ref()
    }

    /// The recurrence family behind the measure, when there is one.
    pub fn source_params(&self) -> Option<&CdhParams> {
        self.source.as_ref()
    }

    /// The support point of a degenerate measure.
    pub fn point(&self) -> Option<f64> {
        match self.kind {
            MeasureKind::Degenerate => Some(self.atoms[0].location),
            _ => None,
        }
    }

    pub fn atom_mass_total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Pointwise density value at x > 0.
    pub fn density_eval(&self, x: f64) -> Result<f64> {
        match &self.density {
            Some(d) => Ok(d.ln_density(x)?.exp()),
            None => Err(Error::Domain(
                "measure has no continuous component".into(),
            )),
        }
    }

    /// Mass of the continuous component (of its truncation to the region
    /// where the density is above 1e-16 of its peak), by adaptive
    /// integration.
    pub fn continuous_mass(&self) -> Result<f64> {
        let Some(d) = &self.density else {
            return Ok(0.0);
        };
        let w_max = substituted_domain(d)?;
        crate::integrate::adaptive(
            |w| {
                if w <= 0.0 {
                    0.0
                } else {
                    d.ln_substituted(w).map(f64::exp).unwrap_or(0.0)
                }
            },
            0.0,
            w_max,
            1e-10,
        )
    }

    /// Continuous mass plus atom masses. For normalized measures this is
    /// 1 up to integration error; for entrance laws it is the truncated
    /// total recorded without any finiteness claim.
    pub fn total_mass(&self) -> Result<f64> {
        Ok(self.continuous_mass()? + self.atom_mass_total())
    }

    /// Quantile of the (normalized) continuous component at v ∈ [0, 1),
    /// through the cached 512-point CDF grid.
    pub fn continuous_quantile(&self, v: f64) -> Result<f64> {
        let Some(d) = &self.density else {
            return Err(Error::Domain("measure has no continuous component".into()));
        };
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Argument(format!("quantile level {v} outside [0,1)")));
        }
        if self.cdf.get().is_none() {
            let built = ContinuousCdf::build(d)?;
            let _ = self.cdf.set(built);
        }
        Ok(self.cdf.get().unwrap().quantile(v))
    }

    /// Serializable view following the published measure schema.
    pub fn to_json(&self) -> MeasureJson {
        let (density_params, log_normalizer) = match &self.density {
            Some(d) => {
                let dp = match d.spec {
                    DensitySpec::ThreeParam(p) => {
                        let [(_, _), (b_re, b_im), (g_re, g_im)] = p.as_complex();
                        DensityParamsJson {
                            alpha: p.alpha(),
                            beta_re: b_re,
                            beta_im: b_im,
                            gamma_re: Some(g_re),
                            gamma_im: Some(g_im),
                        }
                    }
                    DensitySpec::TwoParam { p1, p2 } => DensityParamsJson {
                        alpha: p2,
                        beta_re: p1,
                        beta_im: 0.0,
                        gamma_re: None,
                        gamma_im: None,
                    },
                };
                (Some(dp), Some(d.log_normalizer))
            }
            None => (None, None),
        };
        MeasureJson {
            kind: match self.kind {
                MeasureKind::Degenerate => "Degenerate",
                MeasureKind::FiniteAtomic => "FiniteAtomic",
                MeasureKind::Mixed => "Mixed",
            }
            .to_string(),
            density_params,
            log_normalizer,
            atoms: self.atoms.clone(),
            normalized: self.normalized,
        }
    }
}

/// JSON shape of a measure: `{kind, density_params, log_normalizer,
/// atoms, normalized}`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MeasureJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_params: Option<DensityParamsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_normalizer: Option<f64>,
    pub atoms: Vec<Atom>,
    pub normalized: bool,
}

/// Density parameters in the schema; `gamma_*` is absent for the
/// two-gamma entrance densities.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DensityParamsJson {
    pub alpha: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_im: Option<f64>,
}

// ---------------------------------------------------------------------
// Constructors: transition kernel, marginal law, entrance law
// ---------------------------------------------------------------------

/// ln(4π Γ(α+β) Γ(α+γ) Γ(β+γ)), the normalizer of the three-gamma
/// density of a parameter family.
fn ln_norm_from_params(p: &CdhParams) -> Result<f64> {
    let alpha = p.alpha();
    let pair_part = match p.pair() {
        PairKind::TwoReals { beta, gamma } => {
            ln_gamma_real(alpha + beta)? + ln_gamma_real(alpha + gamma)?
        }
        PairKind::ConjugatePair { re, im } => ln_abs_gamma_sq(alpha + re, im)?,
    };
    Ok(LN_4PI + pair_part + ln_gamma_real(p.pair_sum())?)
}

/// Atom locations −(λ+k)² generated by the (single) negative real
/// parameter λ of the family, in increasing order.
fn negative_param_atoms(p: &CdhParams) -> Result<Vec<f64>> {
    let mut lambdas: Vec<f64> = Vec::new();
    if p.alpha() < 0.0 {
        lambdas.push(p.alpha());
    }
    if let PairKind::TwoReals { beta, gamma } = p.pair() {
        if beta < 0.0 {
            lambdas.push(beta);
        }
        if gamma < 0.0 {
            lambdas.push(gamma);
        }
    }
    match lambdas.len() {
        0 => Ok(Vec::new()),
        1 => {
            let lambda = lambdas[0];
            let mut locs = Vec::new();
            let mut k = 0.0;
            while lambda + k < 0.0 {
                let u = lambda + k;
                locs.push(-u * u);
                k += 1.0;
            }
            Ok(locs)
        }
        _ => Err(Error::Domain(
            "more than one negative parameter: measure outside the supported regimes".into(),
        )),
    }
}

/// The Markov transition kernel 𝔭_{s,t}(x, ·).
///
/// Classification: outside E_s and on the boundary parabola the kernel is
/// the point mass at −(C−t)²; from an isolated atom of E_s it is finitely
/// atomic; elsewhere it is a density on (0, ∞) with the finitely many
/// atoms the parameter signs dictate.
pub fn transition_kernel(c: f64, s: f64, t: f64, x: f64) -> Result<MixedMeasure> {
    if !(s < t) {
        return Err(Error::Argument(format!("need s < t, got s={s}, t={t}")));
    }
    let target = state_space_boundary(c, t);
    if !state_space_contains(c, s, x) {
        return Ok(MixedMeasure::degenerate(target, None));
    }
    let boundary = state_space_boundary(c, s);
    if (x - boundary).abs() <= DEGENERATE_TOL * boundary.abs().max(1.0) {
        return Ok(MixedMeasure::degenerate(target, Some(kernel_params(c, s, t, x))));
    }
    if s > c && x < 0.0 {
        // an isolated atom of E_s: x = −(C−s+N)² with 1 ≤ N < s−C
        let n = (s - c - (-x).sqrt()).round();
        let params = kernel_params(c, s, t, x);
        let n_atoms = n as usize + 1;
        let locations: Vec<f64> = (0..n_atoms)
            .map(|k| {
                let u = c - t + k as f64;
                -u * u
            })
            .collect();
        let masses = christoffel_finite(&params, &locations, n_atoms)?;
        let atoms = locations
            .into_iter()
            .zip(masses)
            .map(|(location, mass)| Atom { location, mass })
            .collect();
        return Ok(MixedMeasure {
            kind: MeasureKind::FiniteAtomic,
            density: None,
            atoms,
            normalized: true,
            source: Some(params),
            cdf: OnceLock::new(),
        });
    }
    let params = kernel_params(c, s, t, x);
    let density = DensityParams {
        spec: DensitySpec::ThreeParam(params),
        log_normalizer: ln_norm_from_params(&params)?,
    };
    let locations = negative_param_atoms(&params)?;
    let masses = atom_masses_christoffel(&params, &locations, CHRISTOFFEL_TRUNCATION)?;
    let atoms = locations
        .into_iter()
        .zip(masses)
        .map(|(location, mass)| Atom { location, mass })
        .collect();
    Ok(MixedMeasure {
        kind: MeasureKind::Mixed,
        density: Some(density),
        atoms,
        normalized: true,
        source: Some(params),
        cdf: OnceLock::new(),
    })
}

/// The marginal law 𝔭_t(· | A, B, C), defined for t ≥ τ = −(A+B)/2.
pub fn marginal_law(pp: &ProcessParams, t: f64) -> Result<MixedMeasure> {
    let tau = pp.tau();
    if t < tau - DEGENERATE_TOL * tau.abs().max(1.0) {
        return Err(Error::Argument(format!(
            "marginal law needs t >= tau = {tau}, got t = {t}"
        )));
    }
    let params = marginal_params(pp, t);
    if (t - tau).abs() <= DEGENERATE_TOL * tau.abs().max(1.0) {
        return Ok(MixedMeasure::degenerate(pp.degenerate_point(), Some(params)));
    }
    let density = DensityParams {
        spec: DensitySpec::ThreeParam(params),
        log_normalizer: ln_norm_from_params(&params)?,
    };
    let locations = negative_param_atoms(&params)?;
    let atoms = marginal_atom_masses(pp, t, &params, &locations)?;
    Ok(MixedMeasure {
        kind: MeasureKind::Mixed,
        density: Some(density),
        atoms,
        normalized: true,
        source: Some(params),
        cdf: OnceLock::new(),
    })
}

fn marginal_atom_masses(
    pp: &ProcessParams,
    t: f64,
    params: &CdhParams,
    locations: &[f64],
) -> Result<Vec<Atom>> {
    if locations.is_empty() {
        return Ok(Vec::new());
    }
    let closed: Result<Vec<f64>> = if t > pp.c() {
        (0..locations.len())
            .map(|k| marginal_mass_after_c(pp, t, k as u32))
            .collect()
    } else {
        (0..locations.len())
            .map(|k| marginal_mass_negative_a(pp, t, k as u32))
            .collect()
    };
    let masses = match closed {
        Ok(m) => m,
        // degenerate closed form (integer parameter differences):
        // fall back to the Christoffel oracle
        Err(Error::Domain(_)) => {
            atom_masses_christoffel(params, locations, CHRISTOFFEL_TRUNCATION)?
        }
        Err(e) => return Err(e),
    };
    Ok(locations
        .iter()
        .zip(masses)
        .map(|(&location, mass)| Atom { location, mass })
        .collect())
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

fn guard_nonzero(v: f64, what: &str) -> Result<f64> {
    if v.abs() < 1e-12 {
        Err(Error::Domain(format!("{what} degenerates (factor ~ 0)")))
    } else {
        Ok(v)
    }
}

/// Closed-form mass of the k-th atom −(A+t+k)² when A is real and
/// A + t < 0.
fn marginal_mass_negative_a(pp: &ProcessParams, t: f64, k: u32) -> Result<f64> {
    let AbPair::Real { a, b } = pp.pair else {
        return Err(Error::Domain("negative-A atoms need real parameters".into()));
    };
    let c = pp.c;
    let ln_part = ln_gamma_real(c - a - 2.0 * t)? - ln_gamma_real(-2.0 * (a + t))?
        + ln_gamma_real(b - a)?
        - ln_gamma_real(b + c)?;
    let num = (a + t + k as f64) * pochhammer(a + c, k) * pochhammer(2.0 * (a + t), k)
        * pochhammer(a + b + 2.0 * t, k);
    let den = factorial(k)
        * (a + t)
        * guard_nonzero(pochhammer(a - c + 2.0 * t + 1.0, k), "(A-C+2t+1)_k")?
        * guard_nonzero(pochhammer(a - b + 1.0, k), "(A-B+1)_k")?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(ln_part.exp() * num / den * sign)
}

/// Closed-form mass of the k-th atom −(C−t+k)² when t > C.
fn marginal_mass_after_c(pp: &ProcessParams, t: f64, k: u32) -> Result<f64> {
    let c = pp.c;
    let ln_part = pp.pair_ln_gamma(2.0 * t - c)?
        - ln_gamma_real(2.0 * (t - c))?
        - ln_gamma_real(pp.a_plus_b() + 2.0 * t)?;
    let num = (c + k as f64 - t) * pp.pair_pochhammer(c, k) * pochhammer(2.0 * (c - t), k);
    let den = factorial(k)
        * (c - t)
        * guard_nonzero(
            pp.pair_pochhammer_reflected(c - 2.0 * t + 1.0, k),
            "(C-2t+1-A)_k (C-2t+1-B)_k",
        )?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(ln_part.exp() * num / den * sign)
}

/// The σ-finite entrance law 𝔭_t(·) with parameters (A, C), A + C > 0.
///
/// Unnormalized: the continuous component typically has infinite total
/// mass. Atom locations follow the −(C−t+k)² reading (the −(C−t+k+t)²
/// variant is inconsistent with the B → ∞ limit of the marginal atoms;
/// see the book's measures chapter).
pub fn entrance_law(a: f64, c: f64, t: f64) -> Result<MixedMeasure> {
    if !(a + c > 0.0) {
        return Err(Error::Argument(format!("need A+C > 0, got {}", a + c)));
    }
    let density = DensityParams {
        spec: DensitySpec::TwoParam {
            p1: a + t,
            p2: c - t,
        },
        log_normalizer: LN_4PI,
    };
    let mut atoms: Vec<Atom> = Vec::new();
    if a + t < 0.0 {
        let mut j = 0u32;
        while a + t + (j as f64) < 0.0 {
            let u = a + t + j as f64;
            atoms.push(Atom {
                location: -u * u,
                mass: entrance_mass_negative_a(a, c, t, j)?,
            });
            j += 1;
        }
    }
    if t > c {
        if !atoms.is_empty() {
            return Err(Error::Domain(
                "both entrance atom families active; outside the A+C > 0 regime".into(),
            ));
        }
        let mut k = 0u32;
        while c - t + (k as f64) < 0.0 {
            let u = c - t + k as f64;
            atoms.push(Atom {
                location: -u * u,
                mass: entrance_mass_after_c(a, c, t, k)?,
            });
            k += 1;
        }
    }
    Ok(MixedMeasure {
        kind: MeasureKind::Mixed,
        density: Some(density),
        atoms,
        normalized: false,
        source: None,
        cdf: OnceLock::new(),
    })
}

fn entrance_mass_negative_a(a: f64, c: f64, t: f64, j: u32) -> Result<f64> {
    let ln_part =
        ln_gamma_real(a + c)? + ln_gamma_real(c - a - 2.0 * t)? - ln_gamma_real(-2.0 * (a + t))?;
    let num = (a + j as f64 + t) * pochhammer(a + c, j) * pochhammer(2.0 * (a + t), j);
    let den = factorial(j)
        * (a + t)
        * guard_nonzero(pochhammer(a - c + 2.0 * t + 1.0, j), "(A-C+2t+1)_j")?;
    Ok(ln_part.exp() * num / den)
}

fn entrance_mass_after_c(a: f64, c: f64, t: f64, k: u32) -> Result<f64> {
    let ln_part =
        ln_gamma_real(a - c + 2.0 * t)? + ln_gamma_real(a + c)? - ln_gamma_real(2.0 * (t - c))?;
    let num = (c + k as f64 - t) * pochhammer(a + c, k) * pochhammer(2.0 * (c - t), k);
    let den = factorial(k)
        * (c - t)
        * guard_nonzero(pochhammer(-a + c - 2.0 * t + 1.0, k), "(C-A-2t+1)_k")?;
    Ok(ln_part.exp() * num / den)
}

/// The Γ-rescaled marginal density and the entrance density at x > 0.
///
/// The first is ≤ the second, increases with B, and their ratio is
/// bounded below by exp(−x/(B+t)² − x/(B+t)).
pub fn entrance_limit_compare(
    a: f64,
    c: f64,
    t: f64,
    b: f64,
    x: f64,
) -> Result<(f64, f64)> {
    if !(a + c > 0.0) || b < a {
        return Err(Error::Argument(
            "limit comparison needs A+C > 0 and B >= A".into(),
        ));
    }
    if t <= -0.5 * (a + b) {
        return Err(Error::Argument("need t > -(A+B)/2".into()));
    }
    if x <= 0.0 {
        return Err(Error::Argument("densities live on x > 0".into()));
    }
    let w = x.sqrt();
    let shared = ln_abs_gamma_sq(a + t, w)? + ln_abs_gamma_sq(c - t, w)?
        - w.ln()
        - ln_abs_gamma_sq_imag(2.0 * w)?
        - LN_4PI;
    let entrance = shared.exp();
    let scaled =
        (shared + ln_abs_gamma_sq(b + t, w)? - 2.0 * ln_gamma_real(b + t)?).exp();
    Ok((scaled, entrance))
}

// ---------------------------------------------------------------------
// Christoffel-sum atom masses
// ---------------------------------------------------------------------

/// Exact finite Christoffel sums for an N-atom measure.
fn christoffel_finite(p: &CdhParams, locations: &[f64], n_atoms: usize) -> Result<Vec<f64>> {
    locations
        .iter()
        .map(|&x0| {
            let mut it = poly::orthonormal_iter(p, x0)?;
            let mut total = 0.0;
            for _ in 0..n_atoms {
                let v = it.next_value();
                total += v * v;
            }
            Ok(1.0 / total)
        })
        .collect()
}

/// Atom masses via the Christoffel sums mass(x₀) = 1/Σ p̃ₙ(x₀)².
///
/// Finitely atomic measures use the exact finite sum. Infinite-support
/// measures use a truncated sum completed with its power-law tail: the
/// terms decay like n^(−s) with s = 1 + 2√(−x₀), so the truncation is
/// extended by a fitted K(1 + c/n)n^(−s) tail. A doubling check guards
/// convergence (relative change below 1e-8).
pub fn atom_masses_christoffel(
    p: &CdhParams,
    locations: &[f64],
    truncation: usize,
) -> Result<Vec<f64>> {
    if locations.is_empty() {
        return Ok(Vec::new());
    }
    match poly::favard_classify(p, 400) {
        FavardClass::FiniteAtoms(n) => christoffel_finite(p, locations, n),
        FavardClass::InfiniteSupport => locations
            .iter()
            .map(|&x0| {
                let full = christoffel_tail_completed(p, x0, truncation)?;
                let half = christoffel_tail_completed(p, x0, truncation / 2)?;
                // relative check for meaningful masses; masses below 1e-6
                // get an absolute floor (their truncated sums are huge and
                // the relative criterion stops being attainable or useful)
                if (full - half).abs() > 1e-8 * full.abs().max(1e-6) {
                    return Err(Error::Convergence(format!(
                        "christoffel mass at {x0} moved by {:.2e} on doubling",
                        (full - half).abs() / full.abs()
                    )));
                }
                Ok(full)
            })
            .collect(),
        FavardClass::NotOrthogonal(j) => Err(Error::Domain(format!(
            "family is not orthogonal (first bad product at {j})"
        ))),
    }
}

fn christoffel_tail_completed(p: &CdhParams, x0: f64, n_terms: usize) -> Result<f64> {
    if x0 >= 0.0 {
        return Err(Error::Domain(format!(
            "atoms of these measures are negative; got {x0}"
        )));
    }
    let n_terms = n_terms.max(1000);
    let s = 1.0 + 2.0 * (-x0).sqrt();
    let mut it = poly::orthonormal_iter(p, x0)?;
    let mut sum = 0.0_f64;
    let sample_from = n_terms / 2;
    let stride = ((n_terms - sample_from) / 200).max(1);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for n in 0..=n_terms {
        let v = it.next_value();
        let term = v * v;
        sum += term;
        if n >= sample_from && n.is_multiple_of(stride) && term > 0.0 {
            samples.push((n as f64, term));
        }
    }
    // quadratic fit t_n n^s = K + K₁/n + K₂/n² over the sampled tail,
    // then Euler–Maclaurin tails of the three power laws
    let tail = if samples.len() >= 8 {
        let us: Vec<f64> = samples.iter().map(|(n, _)| 1.0 / n).collect();
        let vs: Vec<f64> = samples
            .iter()
            .map(|(n, t)| t * (s * n.ln()).exp())
            .collect();
        let m = us.len() as f64;
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
        for (&u, &v) in us.iter().zip(&vs) {
            let u2 = u * u;
            s1 += u;
            s2 += u2;
            s3 += u2 * u;
            s4 += u2 * u2;
            t0 += v;
            t1 += u * v;
            t2 += u2 * v;
        }
        let a = nalgebra::Matrix3::new(m, s1, s2, s1, s2, s3, s2, s3, s4);
        let rhs = nalgebra::Vector3::new(t0, t1, t2);
        let coeffs = a.lu().solve(&rhs).ok_or_else(|| {
            Error::Convergence("singular normal equations in christoffel tail fit".into())
        })?;
        let zeta_tail = |sigma: f64, n: f64| {
            let a = n + 1.0;
            a.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * a.powf(-sigma)
                + sigma / 12.0 * a.powf(-sigma - 1.0)
        };
        let n = n_terms as f64;
        (coeffs[0] * zeta_tail(s, n)
            + coeffs[1] * zeta_tail(s + 1.0, n)
            + coeffs[2] * zeta_tail(s + 2.0, n))
        .max(0.0)
    } else {
        0.0
    };
    Ok(1.0 / (sum + tail))
}

// ---------------------------------------------------------------------
// Continuous-part CDF cache (512-point grid, monotone interpolation)
// ---------------------------------------------------------------------

/// Upper end W of the substituted domain (0, W]: past the density peak
/// with the integrand down to 1e-16 of its maximum.
fn substituted_domain(d: &DensityParams) -> Result<f64> {
    let ln_g = |w: f64| d.ln_substituted(w).unwrap_or(f64::NEG_INFINITY);
    let mut peak = f64::NEG_INFINITY;
    let mut w = 0.25;
    let drop = 16.0 * std::f64::consts::LN_10;
    while w <= 400.0 {
        let v = ln_g(w);
        peak = peak.max(v);
        if peak.is_finite() && v < peak - drop {
            return Ok(w);
        }
        w += 0.25;
    }
    Err(Error::Domain(
        "density does not decay within the certified domain".into(),
    ))
}

/// Cumulative distribution of the continuous part on a 512-point grid in
/// w = √x (256 panels, Simpson with midpoints), with monotone cubic
/// interpolation for quantiles.
#[derive(Debug)]
struct ContinuousCdf {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl ContinuousCdf {
    fn build(d: &DensityParams) -> Result<Self> {
        const PANELS: usize = 256;
        let w_max = substituted_domain(d)?;
        let h = w_max / PANELS as f64;
        let g = |w: f64| -> f64 {
            if w <= 0.0 {
                0.0
            } else {
                d.ln_substituted(w).map(f64::exp).unwrap_or(0.0)
            }
        };
        let mut knots = Vec::with_capacity(PANELS + 1);
        let mut values = Vec::with_capacity(PANELS + 1);
        knots.push(0.0);
        values.push(0.0);
        let mut g_left = 0.0;
        let mut acc = 0.0;
        for i in 0..PANELS {
            let w_right = (i + 1) as f64 * h;
            let g_mid = g(w_right - 0.5 * h);
            let g_right = g(w_right);
            acc += h / 6.0 * (g_left + 4.0 * g_mid + g_right);
            knots.push(w_right);
            values.push(acc);
            g_left = g_right;
        }
        let total = *values.last().unwrap();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Domain(format!(
                "continuous CDF failed to accumulate mass (total {total})"
            )));
        }
        for v in &mut values {
            *v /= total;
        }
        // Fritsch–Carlson monotone slopes
        let n = knots.len();
        let mut slopes = vec![0.0; n];
        let d0: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / h)
            .collect();
        slopes[0] = d0[0];
        slopes[n - 1] = d0[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if d0[i - 1] * d0[i] <= 0.0 {
                0.0
            } else {
                2.0 * d0[i - 1] * d0[i] / (d0[i - 1] + d0[i])
            };
        }
        Ok(Self {
            knots,
            values,
            slopes,
        })
    }

    fn hermite(&self, i: usize, w: f64) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let t = (w - self.knots[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    /// w with CDF(w) = v, bisected to 1e-10 in the CDF coordinate;
    /// returns x = w².
    fn quantile(&self, v: f64) -> f64 {
        let i = match self
            .values
            .binary_search_by(|probe| probe.total_cmp(&v))
        {
            Ok(i) => return self.knots[i] * self.knots[i],
            Err(i) => i.saturating_sub(1).min(self.knots.len() - 2),
        };
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = self.hermite(i, mid);
            if (f - v).abs() <= 1e-10 {
                return mid * mid;
            }
            if f < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = 0.5 * (lo + hi);
        w * w
    }
}
