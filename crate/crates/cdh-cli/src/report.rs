//! Verification suites and their JSON reports.
//!
//! Every check produces one `VerificationReport`; a suite is a vector of
//! them, ordered by (suite, grid index) no matter how the parallel
//! execution interleaves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cdh::harness::{self, Rat};
use cdh::measure::{self, ProcessParams};
use cdh::poly::CdhParams;
use cdh::{quadrature, weyl};

#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: serde_json::Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

fn report(
    check: &str,
    params: serde_json::Value,
    tolerance: f64,
    body: impl FnOnce() -> Result<f64, String>,
) -> VerificationReport {
    let start = std::time::Instant::now();
    let outcome = body();
    let runtime_ms = start.elapsed().as_millis() as u64;
    let residual = outcome.unwrap_or(f64::INFINITY);
    VerificationReport {
        check: check.to_string(),
        params,
        residual,
        tolerance,
        pass: residual <= tolerance,
        runtime_ms,
    }
}

// ---------------------------------------------------------------------
// Grid schema
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_im: Option<f64>,
}

impl FamilySpec {
    fn params(&self) -> Result<CdhParams, String> {
        match (self.beta, self.gamma, self.pair_re, self.pair_im) {
            (Some(b), Some(g), None, None) => Ok(CdhParams::new_real(self.alpha, b, g)),
            (None, None, Some(re), Some(im)) => {
                Ok(CdhParams::new_conjugate(self.alpha, re, im))
            }
            _ => Err("family spec needs beta/gamma or pair_re/pair_im".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_im: Option<f64>,
    pub c: f64,
}

impl ProcessSpec {
    fn params(&self) -> Result<ProcessParams, String> {
        match (self.a, self.b, self.pair_re, self.pair_im) {
            (Some(a), Some(b), None, None) => {
                ProcessParams::new_real(a, b, self.c).map_err(|e| e.to_string())
            }
            (None, None, Some(re), Some(im)) => {
                ProcessParams::new_conjugate(re, im, self.c).map_err(|e| e.to_string())
            }
            _ => Err("process spec needs a/b or pair_re/pair_im".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MartingaleSpec {
    #[serde(flatten)]
    pub process: ProcessSpec,
    pub s: f64,
    pub t: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_reject: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChapmanSpec {
    pub c: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionSpec {
    #[serde(flatten)]
    pub process: ProcessSpec,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntranceLimitSpec {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountSpec {
    pub count: usize,
    pub k: usize,
}

#[derive(Debug, Deserialize)]
pub struct Grid {
    pub orthogonality: Vec<FamilySpec>,
    pub martingale: Vec<MartingaleSpec>,
    pub chapman: Vec<ChapmanSpec>,
    pub marginal_evolution: Vec<EvolutionSpec>,
    pub entrance_limit: EntranceLimitSpec,
    pub commutator: CountSpec,
    pub qvar: CountSpec,
}

pub fn load_grid(arg: &str) -> Result<Grid, String> {
    let text = if arg == "default" {
        include_str!("../grids/default.json").to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read grid file {arg}: {e}"))?
    };
    serde_json::from_str(&text).map_err(|e| format!("grid file does not parse: {e}"))
}

// ---------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------

fn orthogonality_suite(grid: &Grid) -> Vec<VerificationReport> {
    grid.orthogonality
        .par_iter()
        .map(|spec| {
            // the Favard scan has no analytic stopping bound in general;
            // the report records the pragmatic cutoff used
            let mut params = serde_json::to_value(spec).unwrap();
            params["favard_scan_limit"] = serde_json::json!(400);
            report("orthogonality", params, 1e-9, || {
                let p = spec.params()?;
                quadrature::verify_orthogonality(&p, 8).map_err(|e| e.to_string())
            })
        })
        .collect()
}

fn martingale_suite(grid: &Grid) -> Vec<VerificationReport> {
    grid.martingale
        .par_iter()
        .map(|spec| {
            let params = serde_json::to_value(spec).unwrap();
            if spec.expect_reject {
                report("martingale-reject", params, 0.0, || {
                    let pp = spec.process.params()?;
                    match quadrature::verify_martingale(&pp, spec.s, spec.t, spec.x, 8) {
                        Err(cdh::Error::Argument(_)) => Ok(0.0),
                        Err(e) => Err(e.to_string()),
                        Ok(_) => Ok(1.0),
                    }
                })
            } else {
                report("martingale", params, 1e-8, || {
                    let pp = spec.process.params()?;
                    quadrature::verify_martingale(&pp, spec.s, spec.t, spec.x, 8)
                        .map_err(|e| e.to_string())
                })
            }
        })
        .collect()
}

fn chapman_suite(grid: &Grid) -> Vec<VerificationReport> {
    grid.chapman
        .par_iter()
        .map(|spec| {
            report(
                "chapman",
                serde_json::to_value(spec).unwrap(),
                1e-8,
                || {
                    quadrature::verify_chapman_kolmogorov(spec.c, spec.s, spec.t, spec.u, spec.x, 8)
                        .map_err(|e| e.to_string())
                },
            )
        })
        .collect()
}

fn evolution_suite(grid: &Grid) -> Vec<VerificationReport> {
    grid.marginal_evolution
        .par_iter()
        .map(|spec| {
            report(
                "marginal-evolution",
                serde_json::to_value(spec).unwrap(),
                1e-8,
                || {
                    let pp = spec.process.params()?;
                    quadrature::verify_marginal_evolution(&pp, spec.s, spec.t, 8)
                        .map_err(|e| e.to_string())
                },
            )
        })
        .collect()
}

fn entrance_limit_suite(grid: &Grid) -> Vec<VerificationReport> {
    let spec = &grid.entrance_limit;
    let mut points = Vec::new();
    for &a in &spec.a {
        for &c in &spec.c {
            for &t in &spec.t {
                for &x in &spec.x {
                    points.push((a, c, t, x));
                }
            }
        }
    }
    let b_levels = spec.b.clone();
    points
        .par_iter()
        .map(|&(a, c, t, x)| {
            report(
                "entrance-limit",
                json!({"a": a, "c": c, "t": t, "x": x, "b": b_levels}),
                1e-12,
                || {
                    let mut worst = 0.0_f64;
                    let mut previous = 0.0_f64;
                    for &b in &b_levels {
                        let (scaled, entrance) =
                            measure::entrance_limit_compare(a, c, t, b, x)
                                .map_err(|e| e.to_string())?;
                        // scaled density below the entrance density
                        worst = worst.max((scaled - entrance) / entrance);
                        // monotone in B
                        worst = worst.max((previous - scaled) / entrance);
                        // ratio lower bound from the tail estimate
                        let bound = (-x / (b + t).powi(2) - x / (b + t)).exp();
                        worst = worst.max(bound - scaled / entrance);
                        previous = scaled;
                    }
                    Ok(worst.max(0.0))
                },
            )
        })
        .collect()
}

fn random_rational<R: rand::Rng>(rng: &mut R, lo: i64, hi: i64, dmax: i64) -> Rat {
    harness::rat(rng.gen_range(lo..hi), rng.gen_range(1..dmax))
}

fn commutator_suite(grid: &Grid, seed: u64) -> Vec<VerificationReport> {
    use rand::SeedableRng;
    let spec = &grid.commutator;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let triples: Vec<(Rat, Rat, Rat)> = (0..spec.count)
        .map(|_| {
            (
                random_rational(&mut rng, -8, 8, 5),
                random_rational(&mut rng, -8, 8, 5),
                random_rational(&mut rng, -8, 8, 5),
            )
        })
        .collect();
    let k = spec.k;
    triples
        .par_iter()
        .map(|(a, b, c)| {
            report(
                "commutator",
                json!({"a": a.to_string(), "b": b.to_string(), "c": c.to_string(), "k": k}),
                0.0,
                || {
                    let jt = harness::jacobi_matrices(a, b, c, k).map_err(|e| e.to_string())?;
                    let residual = harness::commutator_residual(&jt);
                    Ok(if num::Zero::is_zero(&residual) { 0.0 } else { 1.0 })
                },
            )
        })
        .collect()
}

fn qvar_suite(grid: &Grid, seed: u64) -> Vec<VerificationReport> {
    use rand::{Rng, SeedableRng};
    let spec = &grid.qvar;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0x71c3);
    let tuples: Vec<(Rat, Rat, Rat, Rat, Rat, Rat)> = (0..spec.count)
        .map(|_| {
            let s = random_rational(&mut rng, -6, 6, 4);
            let t = &s + harness::rat(rng.gen_range(1..6), rng.gen_range(1..4));
            let u = &t + harness::rat(rng.gen_range(1..6), rng.gen_range(1..4));
            (
                random_rational(&mut rng, -6, 6, 4),
                random_rational(&mut rng, -6, 6, 4),
                random_rational(&mut rng, -6, 6, 4),
                s,
                t,
                u,
            )
        })
        .collect();
    let k = spec.k;
    let mut reports: Vec<VerificationReport> = tuples
        .par_iter()
        .map(|(a, b, c, s, t, u)| {
            report(
                "qvar-matrix",
                json!({
                    "a": a.to_string(), "b": b.to_string(), "c": c.to_string(),
                    "s": s.to_string(), "t": t.to_string(), "u": u.to_string(), "k": k
                }),
                0.0,
                || {
                    let r = harness::quadratic_variance_matrix_identity(a, b, c, s, t, u, k)
                        .map_err(|e| e.to_string())?;
                    let lin = harness::harness_linearity_residual(a, b, c, s, t, u, k)
                        .map_err(|e| e.to_string())?;
                    let bad = !num::Zero::is_zero(&r) || !num::Zero::is_zero(&lin);
                    Ok(if bad { 1.0 } else { 0.0 })
                },
            )
        })
        .collect();
    reports.push(report(
        "qvar-degenerate-collapse",
        json!({"note": "t = s reduces the identity to J^2(s) = J^2(s)"}),
        0.0,
        || {
            let (a, b, c) = (harness::rat(1, 1), harness::rat(2, 1), harness::rat(3, 1));
            let zero = harness::rat(0, 1);
            let two = harness::rat(2, 1);
            let r = harness::quadratic_variance_matrix_identity(&a, &b, &c, &zero, &zero, &two, 8)
                .map_err(|e| e.to_string())?;
            Ok(if num::Zero::is_zero(&r) { 0.0 } else { 1.0 })
        },
    ));
    reports
}

fn weyl_suite(expr: Option<&str>) -> Vec<VerificationReport> {
    let mut reports = vec![report(
        "weyl-commutator",
        json!({"identity": "X Y - Y X = 1/2 X^2 + 2 Y"}),
        0.0,
        || {
            Ok(if weyl::verify_commutator_symbolic() {
                0.0
            } else {
                1.0
            })
        },
    )];
    if let Some(src) = expr {
        let canonical = weyl::parse_operator(src).map(|op| (op.to_string(), op.is_zero()));
        reports.push(report(
            "weyl-expression",
            json!({
                "expr": src,
                "normal_form": canonical.as_ref().map(|(s, _)| s.clone()).unwrap_or_default()
            }),
            0.0,
            || match canonical {
                Ok((_, true)) => Ok(0.0),
                Ok((_, false)) => Ok(1.0),
                Err(e) => Err(e.to_string()),
            },
        ));
    }
    reports
}

pub fn run_suites(
    suite: &str,
    grid: &Grid,
    seed: u64,
    expr: Option<&str>,
) -> Result<Vec<VerificationReport>, String> {
    let mut reports = Vec::new();
    let mut matched = false;
    if suite == "orthogonality" || suite == "all" {
        matched = true;
        reports.extend(orthogonality_suite(grid));
    }
    if suite == "martingale" || suite == "all" {
        matched = true;
        reports.extend(martingale_suite(grid));
    }
    if suite == "chapman" || suite == "all" {
        matched = true;
        reports.extend(chapman_suite(grid));
    }
    if suite == "marginal-evolution" || suite == "all" {
        matched = true;
        reports.extend(evolution_suite(grid));
    }
    if suite == "entrance-limit" || suite == "all" {
        matched = true;
        reports.extend(entrance_limit_suite(grid));
    }
    if suite == "commutator" || suite == "all" {
        matched = true;
        reports.extend(commutator_suite(grid, seed));
    }
    if suite == "qvar-matrix" || suite == "all" {
        matched = true;
        reports.extend(qvar_suite(grid, seed));
    }
    if suite == "weyl" || suite == "all" {
        matched = true;
        reports.extend(weyl_suite(expr));
    }
    if !matched {
        return Err(format!(
            "unknown suite '{suite}' (orthogonality | martingale | chapman | \
             marginal-evolution | entrance-limit | commutator | qvar-matrix | weyl | all)"
        ));
    }
    Ok(reports)
}
