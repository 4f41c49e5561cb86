//! Sampling: inverse-CDF draws from mixed measures, trajectory
//! generation for the process, the standard-form (quadratic harness)
//! transform, and ensemble statistics.
//!
//! Randomness is counter-based: a [`SeededStream`] is a (seed, stream)
//! pair, and ensembles give replicate i the stream with id i, so
//! parallel generation is order-independent and bitwise reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::measure::{self, MeasureKind, MixedMeasure, ProcessParams};
use crate::{Error, Result};

/// Reproducible RNG handle: identical (seed, stream_id) reproduce
/// identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One draw from a normalized mixed measure.
///
/// The unit draw u is matched against the atoms in ascending location
/// order (each atom owns the half-open interval [F(x−), F(x))); the
/// remaining mass maps through the cached continuous CDF.
pub fn sample_measure<R: Rng>(m: &MixedMeasure, rng: &mut R) -> Result<f64> {
    if !m.normalized() {
        return Err(Error::NotNormalized);
    }
    if let Some(point) = m.point() {
        return Ok(point);
    }
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for atom in m.atoms() {
        cum += atom.mass;
        if u < cum {
            return Ok(atom.location);
        }
    }
    match m.kind() {
        // u beyond the summed masses only by rounding in the mass total
        MeasureKind::FiniteAtomic => Ok(m.atoms().last().unwrap().location),
        _ => {
            let v = ((u - cum) / (1.0 - cum)).clamp(0.0, 1.0 - 1e-12);
            m.continuous_quantile(v)
        }
    }
}

/// A sampled path: strictly increasing times with one state per time.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
}

impl Trajectory {
    /// Checks every state against the state space of its time.
    pub fn in_state_space(&self, c: f64) -> bool {
        self.times
            .iter()
            .zip(&self.states)
            .all(|(&t, &x)| measure::state_space_contains(c, t, x))
    }
}

fn validate_times(pp: &ProcessParams, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Argument("empty time grid".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Argument("times must be strictly increasing".into()));
    }
    let tau = pp.tau();
    if times[0] < tau - 1e-12 * tau.abs().max(1.0) {
        return Err(Error::Argument(format!(
            "first time {} is before tau = {tau}",
            times[0]
        )));
    }
    Ok(())
}

/// Prepared sampler for one time grid: the initial marginal law is
/// classified once and its CDF cache is shared across replicates.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    pp: ProcessParams,
    times: Vec<f64>,
    initial: MixedMeasure,
}

impl TrajectorySampler {
    pub fn new(pp: &ProcessParams, times: &[f64]) -> Result<Self> {
        validate_times(pp, times)?;
        Ok(Self {
            pp: *pp,
            times: times.to_vec(),
            initial: measure::marginal_law(pp, times[0])?,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(self.times.len());
        let mut x = sample_measure(&self.initial, rng)?;
        states.push(x);
        for w in self.times.windows(2) {
            let kernel = measure::transition_kernel(self.pp.c(), w[0], w[1], x)?;
            x = sample_measure(&kernel, rng)?;
            states.push(x);
        }
        Ok(Trajectory {
            times: self.times.clone(),
            states,
        })
    }
}

/// Samples one trajectory: the initial state from the marginal law at
/// `times[0]` (deterministic when that time is τ), then kernel steps.
pub fn sample_trajectory<R: Rng>(
    pp: &ProcessParams,
    times: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    TrajectorySampler::new(pp, times)?.sample(rng)
}

/// Samples `replicates` trajectories in parallel; replicate i draws from
/// stream (seed, i), so the ensemble does not depend on thread order.
pub fn sample_ensemble(
    pp: &ProcessParams,
    times: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    let sampler = TrajectorySampler::new(pp, times)?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededStream::new(seed, i as u64).rng();
            sampler.sample(&mut rng)
        })
        .collect()
}

/// Conditional mean of the kernel from (s, x): x + 2C(t−s) − (t²−s²).
pub fn conditional_mean_exact(c: f64, s: f64, t: f64, x: f64) -> Result<f64> {
    if !(s <= t) {
        return Err(Error::Argument(format!("need s <= t, got s={s}, t={t}")));
    }
    if !measure::state_space_contains(c, s, x) {
        return Err(Error::Argument(format!("x = {x} is outside E_s")));
    }
    Ok(x + 2.0 * c * (t - s) - (t * t - s * s))
}

/// Maps a trajectory of the process onto the standard-form coordinates:
/// clock t = 2θ + (A+B) and state
/// X = (T_θ + (t² − 2(A+B+2C)t + (A−B)²)/4) / √((A+C)(B+C)).
pub fn standard_form_transform(pp: &ProcessParams, traj: &Trajectory) -> Result<Trajectory> {
    let ab = pp.a_plus_b();
    let scale = pp.variance_factor().sqrt();
    let a_minus_b_sq = -4.0 * pp.degenerate_point();
    let mut times = Vec::with_capacity(traj.times.len());
    let mut states = Vec::with_capacity(traj.times.len());
    for (&theta, &v) in traj.times.iter().zip(&traj.states) {
        let t = 2.0 * theta + ab;
        if t < -1e-12 {
            return Err(Error::Argument(format!(
                "time {theta} has no standard-clock preimage (t = {t} < 0)"
            )));
        }
        let shift = (t * t - 2.0 * (ab + 2.0 * pp.c()) * t + a_minus_b_sq) / 4.0;
        times.push(t);
        states.push((v + shift) / scale);
    }
    Ok(Trajectory { times, states })
}

/// Ensemble moment estimates on a common grid, with standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub mean_ses: Vec<f64>,
    /// Unbiased variances per time.
    pub variances: Vec<f64>,
    pub variance_ses: Vec<f64>,
    /// Centered covariances cov(X_s, X_t).
    pub covariances: Vec<Vec<f64>>,
    /// Uncentered product moments E[X_s X_t].
    pub product_moments: Vec<Vec<f64>>,
    pub product_moment_ses: Vec<Vec<f64>>,
}

/// Unbiased moment estimators over an ensemble sharing one time grid.
pub fn empirical_moments(ensemble: &[Trajectory]) -> Result<EnsembleStats> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Argument("empty ensemble".into()))?;
    let times = first.times.clone();
    if ensemble.iter().any(|t| t.times != times) {
        return Err(Error::Argument("trajectories share no common grid".into()));
    }
    let n = ensemble.len();
    let nf = n as f64;
    let d = times.len();
    let mut means = vec![0.0; d];
    for traj in ensemble {
        for (m, &x) in means.iter_mut().zip(&traj.states) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= nf;
    }
    let mut mean_ses = vec![0.0; d];
    let mut variances = vec![0.0; d];
    let mut variance_ses = vec![0.0; d];
    for j in 0..d {
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for traj in ensemble {
            let dev = traj.states[j] - means[j];
            m2 += dev * dev;
            m4 += dev * dev * dev * dev;
        }
        let var = m2 / (nf - 1.0).max(1.0);
        variances[j] = var;
        mean_ses[j] = (var / nf).sqrt();
        // SE of the variance: sd of the squared deviations over √n
        let sq_var = (m4 / nf - (m2 / nf) * (m2 / nf)).max(0.0);
        variance_ses[j] = (sq_var / nf).sqrt();
    }
    let mut covariances = vec![vec![0.0; d]; d];
    let mut product_moments = vec![vec![0.0; d]; d];
    let mut product_moment_ses = vec![vec![0.0; d]; d];
    for j in 0..d {
        for k in j..d {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for traj in ensemble {
                let p = traj.states[j] * traj.states[k];
                sum += p;
                sum_sq += p * p;
            }
            let mean_p = sum / nf;
            product_moments[j][k] = mean_p;
            product_moments[k][j] = mean_p;
            let var_p = (sum_sq / nf - mean_p * mean_p).max(0.0);
            let se = (var_p / nf).sqrt();
            product_moment_ses[j][k] = se;
            product_moment_ses[k][j] = se;
            let cov = (sum - nf * means[j] * means[k]) / (nf - 1.0).max(1.0);
            covariances[j][k] = cov;
            covariances[k][j] = cov;
        }
    }
    Ok(EnsembleStats {
        times,
        means,
        mean_ses,
        variances,
        variance_ses,
        covariances,
        product_moments,
        product_moment_ses,
    })
}
