//! Self-check suites behind the `gradcheck` and `verify` commands. Each check
//! reports a pass flag and a one-line detail; nothing here panics on failure.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor};
use crate::diagnostics::{heatmap_from_dets, indicatrix_from_metric, quantile_type7};
use crate::error::{Error, Result};
use crate::geometry::{
    geometric_loss, geometric_loss_value, lee_loss, lee_loss_value, pullback_metrics, DetOptions, PullbackMetric,
};
use crate::metrics::{evaluate_all, kl_sigma, knn_recall, spearman_distances, stress, trustworthiness, EvalOptions};
use crate::nn::{forward, reconstruction_loss, Autoencoder, Mlp};
use crate::pca::{
    linear_ae_subspace_report, orthogonality_residual, pca_as_autoencoder, pca_fit, rotated_gaussian, LinearAeConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    /// A check whose computation itself failed.
    fn errored(name: &str, err: &Error) -> Self {
        Self::new(name, false, format!("error kind={} {err}", err.kind()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!(
            "suite {}: {} checks, {} failed\n",
            self.suite,
            self.checks.len(),
            failed
        ));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariance,
    Pca,
    Metrics,
    Diagnostics,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Invariance, Suite::Pca, Suite::Metrics, Suite::Diagnostics];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Pca => "pca",
            Suite::Metrics => "metrics",
            Suite::Diagnostics => "diagnostics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown suite {s:?}, expected invariance|pca|metrics|diagnostics"
            ))
        })
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Invariance => invariance_checks(seed),
        Suite::Pca => pca_checks(seed),
        Suite::Metrics => metric_checks(seed),
        Suite::Diagnostics => diagnostic_checks(seed),
    };
    SuiteReport {
        suite: suite.name().to_string(),
        checks,
    }
}

fn record(name: &str, r: Result<(bool, String)>) -> CheckResult {
    match r {
        Ok((ok, detail)) => CheckResult::new(name, ok, detail),
        Err(e) => CheckResult::errored(name, &e),
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Tensor<f64> {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-scale..scale)).collect()).expect("sized")
}

// ---------------------------------------------------------------- gradients

/// Outcome of one finite-difference comparison over every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckOutcome {
    pub n_params: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(network, tensor, element)` of the worst entry; network 0 is the encoder.
    pub worst: (usize, usize, usize),
}

/// Denominator floor for relative errors of near-zero gradients.
pub const REL_FLOOR: f64 = 1e-8;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Which scalar objective to differentiate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `ℒ_det(D, E(x))`.
    Det,
    /// `ℒ_Lee(D, E(x))`.
    Lee,
    /// Reconstruction plus `alpha · ℒ_det`.
    Training { alpha: f64 },
}

fn objective_value(ae: &Autoencoder<f64>, x: &Tensor<f64>, obj: Objective) -> Result<f64> {
    let z = ae.encode(x)?;
    let opts = DetOptions::default();
    Ok(match obj {
        Objective::Det => geometric_loss_value(&ae.decoder, &z, &opts)?,
        Objective::Lee => lee_loss_value(&ae.decoder, &z)?,
        Objective::Training { alpha } => {
            let x_hat = ae.decoder.apply(&z)?;
            let rec = x
                .data()
                .iter()
                .zip(x_hat.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / x.len() as f64;
            rec + alpha * geometric_loss_value(&ae.decoder, &z, &opts)?
        }
    })
}

fn objective_grads(ae: &Autoencoder<f64>, x: &Tensor<f64>, obj: Objective) -> Result<Vec<Vec<Tensor<f64>>>> {
    let mut tape = Tape::new();
    let enc = ae.encoder.register(&mut tape, true)?;
    let dec = ae.decoder.register(&mut tape, true)?;
    let xv = tape.constant(x.clone())?;
    let z = forward(&mut tape, &enc, xv)?;
    let loss = match obj {
        Objective::Det => geometric_loss(&mut tape, &dec, z, &DetOptions::default())?,
        Objective::Lee => lee_loss(&mut tape, &dec, z)?,
        Objective::Training { alpha } => {
            let x_hat = forward(&mut tape, &dec, z)?;
            let rec = reconstruction_loss(&mut tape, xv, x_hat)?;
            let det = geometric_loss(&mut tape, &dec, z, &DetOptions::default())?;
            let det = tape.scale(det, alpha)?;
            tape.add(rec, det)?
        }
    };
    tape.backward(loss)?;
    // parameters the loss does not reach (the output bias under ℒ_det) get zero
    Ok([enc, dec]
        .iter()
        .map(|vars| {
            vars.params()
                .map(|v| tape.grad(v).unwrap_or_else(|| Tensor::zeros(tape.shape(v).to_vec())))
                .collect()
        })
        .collect())
}

fn net_mut(ae: &mut Autoencoder<f64>, k: usize) -> &mut Mlp<f64> {
    if k == 0 {
        &mut ae.encoder
    } else {
        &mut ae.decoder
    }
}

/// Compares tape gradients of `obj` with central differences of step `h`.
pub fn gradcheck(ae: &Autoencoder<f64>, x: &Tensor<f64>, obj: Objective, h: f64) -> Result<GradcheckOutcome> {
    let grads = objective_grads(ae, x, obj)?;
    let mut out = GradcheckOutcome {
        n_params: 0,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: (0, 0, 0),
    };
    let mut probe = ae.clone();
    for (k, net_grads) in grads.iter().enumerate() {
        for (t, g) in net_grads.iter().enumerate() {
            for e in 0..g.len() {
                let orig = net_mut(&mut probe, k).params().nth(t).expect("param").data()[e];
                let set = |probe: &mut Autoencoder<f64>, v: f64| {
                    net_mut(probe, k).params_mut().nth(t).expect("param").data_mut()[e] = v;
                };
                set(&mut probe, orig + h);
                let up = objective_value(&probe, x, obj)?;
                set(&mut probe, orig - h);
                let down = objective_value(&probe, x, obj)?;
                set(&mut probe, orig);
                let numeric = (up - down) / (2.0 * h);
                let analytic = g.data()[e];
                let rel = rel_error(analytic, numeric);
                out.n_params += 1;
                out.max_abs_error = out.max_abs_error.max((analytic - numeric).abs());
                if rel > out.max_rel_error {
                    out.max_rel_error = rel;
                    out.worst = (k, t, e);
                }
            }
        }
    }
    Ok(out)
}

/// Finite-difference suite on small ELU autoencoders, `h = 1e-5`, tolerance `1e-4`.
pub fn gradcheck_suite(seed: u64) -> SuiteReport {
    let cases: [(&str, &[usize], Objective); 4] = [
        ("det 3-6-2-6-3", &[6], Objective::Det),
        ("det 3-4-4-2-4-4-3", &[4, 4], Objective::Det),
        ("lee 3-6-2-6-3", &[6], Objective::Lee),
        ("training 3-6-2-6-3", &[6], Objective::Training { alpha: 0.1 }),
    ];
    let checks = cases
        .iter()
        .enumerate()
        .map(|(i, (name, hidden, obj))| {
            record(
                name,
                (|| {
                    let case_seed = seed.wrapping_add(i as u64);
                    let ae = Autoencoder::<f64>::init(3, hidden, 2, case_seed)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(case_seed ^ 0x9e37);
                    let x = uniform(&mut rng, 12, 3, 1.0);
                    let o = gradcheck(&ae, &x, *obj, 1e-5)?;
                    Ok((
                        o.max_rel_error < 1e-4,
                        format!(
                            "{} params, max rel err {:.3e}, max abs err {:.3e}",
                            o.n_params, o.max_rel_error, o.max_abs_error
                        ),
                    ))
                })(),
            )
        })
        .collect();
    SuiteReport {
        suite: "gradcheck".into(),
        checks,
    }
}

// ---------------------------------------------------------------- invariance

/// Random decoder `2-h-h-3` and latent batch.
fn random_decoder(rng: &mut ChaCha8Rng) -> Result<(Mlp<f64>, Tensor<f64>)> {
    let h = rng.random_range(4..=10);
    let dec = Mlp::init(&[2, h, h, 3], rng.random())?;
    let b = rng.random_range(4..=32);
    Ok((dec, uniform(rng, b, 2, 2.0)))
}

fn invariance_checks(seed: u64) -> Vec<CheckResult> {
    let opts = DetOptions::default();
    let mut out = Vec::new();

    out.push(record(
        "first-layer scaling (beta in 0.1, 2, 17; 5 networks)",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let (dec, z) = random_decoder(&mut rng)?;
                let base = geometric_loss_value(&dec, &z, &opts)?;
                for beta in [0.1, 2.0, 17.0] {
                    let mut scaled = dec.clone();
                    scaled.scale_layer_weights(0, beta);
                    let v = geometric_loss_value(&scaled, &z.scaled(1.0 / beta), &opts)?;
                    worst = worst.max((v - base).abs());
                }
            }
            Ok((worst < 1e-10, format!("max |change| {worst:.3e}")))
        })(),
    ));

    out.push(record(
        "nonnegativity (100 random pairs)",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mut min = f64::INFINITY;
            for _ in 0..100 {
                let (dec, z) = random_decoder(&mut rng)?;
                min = min.min(geometric_loss_value(&dec, &z, &opts)?);
            }
            Ok((min >= 0.0, format!("min {min:.3e}")))
        })(),
    ));

    out.push(record(
        "linear decoders",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let mut max = 0.0f64;
            for _ in 0..20 {
                let dec = Mlp::linear(
                    uniform(&mut rng, 3, 2, 1.0),
                    Tensor::vector(uniform(&mut rng, 1, 3, 1.0).into_data()),
                )?;
                let z = uniform(&mut rng, 16, 2, 3.0);
                max = max.max(geometric_loss_value(&dec, &z, &opts)?);
            }
            Ok((max < 1e-20, format!("max {max:.3e}")))
        })(),
    ));

    out.push(record(
        "determinants times 7 (latent scaling)",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let mut worst = 0.0f64;
            let mut ratio_err = 0.0f64;
            for _ in 0..5 {
                let (dec, z) = random_decoder(&mut rng)?;
                let s = 7f64.powf(1.0 / (2.0 * z.cols() as f64));
                // s·D(z) and D(s·z) both carry det(JᵗJ) times s^(2l) = 7
                let mut outer = dec.clone();
                outer.scale_output(s);
                let mut inner = dec.clone();
                inner.scale_layer_weights(0, s);
                let sz = z.scaled(s);
                let pairs = [
                    (pullback_metrics(&dec, &z)?, pullback_metrics(&outer, &z)?),
                    (pullback_metrics(&dec, &sz)?, pullback_metrics(&inner, &z)?),
                ];
                for (a, b) in pairs.iter().flat_map(|(a, b)| a.iter().zip(b)) {
                    ratio_err = ratio_err.max((b.gen_jac_det() / a.gen_jac_det() / 7.0 - 1.0).abs());
                }
                let d_outer = geometric_loss_value(&outer, &z, &opts)? - geometric_loss_value(&dec, &z, &opts)?;
                let d_inner = geometric_loss_value(&inner, &z, &opts)? - geometric_loss_value(&dec, &sz, &opts)?;
                worst = worst.max(d_outer.abs()).max(d_inner.abs());
            }
            Ok((
                worst < 1e-10 && ratio_err < 1e-10,
                format!("max |change| {worst:.3e}, max det ratio error {ratio_err:.3e}"),
            ))
        })(),
    ));

    out.push(record(
        "singleton batch is zero",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
            let (dec, z) = random_decoder(&mut rng)?;
            let v = geometric_loss_value(&dec, &z.select_rows(&[0]), &opts)?;
            Ok((v == 0.0, format!("value {v:e}")))
        })(),
    ));
    out
}

// ---------------------------------------------------------------- pca

fn pca_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let data = rotated_gaussian(300, &[5.0, 2.0, 0.1], seed);

    out.push(record(
        "pca decoder isotropy (400 grid points)",
        (|| {
            let x = data.as_ref().map_err(|e| Error::Invalid(e.to_string()))?;
            let ae = pca_as_autoencoder(&pca_fit(x, 2)?)?;
            let z = ae.encode(x)?;
            let grid = box_grid(&z, 20);
            let metrics = pullback_metrics(&ae.decoder, &grid)?;
            let (mut dev_c, mut dev_d) = (0.0f64, 0.0f64);
            for g in &metrics {
                dev_c = dev_c.max((g.condition_number()? - 1.0).abs());
                dev_d = dev_d.max((g.gen_jac_det() - 1.0).abs());
            }
            Ok((
                metrics.len() == 400 && dev_c < 1e-9 && dev_d < 1e-9,
                format!(
                    "{} points, max |cond - 1| {dev_c:.3e}, max |det - 1| {dev_d:.3e}",
                    metrics.len()
                ),
            ))
        })(),
    ));

    out.push(record(
        "orthogonal projection residual",
        (|| {
            let x = data.as_ref().map_err(|e| Error::Invalid(e.to_string()))?;
            let ae = pca_as_autoencoder(&pca_fit(x, 2)?)?;
            let r = orthogonality_residual(&ae, x)?;
            Ok((r < 1e-9, format!("residual {r:.3e}")))
        })(),
    ));

    out.push(record(
        "linear autoencoder recovers the pca subspace",
        (|| {
            let x = data.as_ref().map_err(|e| Error::Invalid(e.to_string()))?;
            let rep = linear_ae_subspace_report(x, 2, seed, &LinearAeConfig::default())?;
            let dev = rep.max_mixing_deviation();
            Ok((
                rep.max_principal_angle < 0.02 && dev < 0.05,
                format!(
                    "max angle {:.3e} rad, max |sigma - 1| {dev:.3e}",
                    rep.max_principal_angle
                ),
            ))
        })(),
    ));
    out
}

/// `steps × steps` grid over the bounding box of a two-column matrix.
fn box_grid(z: &Tensor<f64>, steps: usize) -> Tensor<f64> {
    let lo = [0, 1].map(|k| (0..z.rows()).map(|i| z.get2(i, k)).fold(f64::INFINITY, f64::min));
    let hi = [0, 1].map(|k| (0..z.rows()).map(|i| z.get2(i, k)).fold(f64::NEG_INFINITY, f64::max));
    let at = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (steps - 1) as f64;
    let mut data = Vec::with_capacity(2 * steps * steps);
    for iy in 0..steps {
        for ix in 0..steps {
            data.push(at(0, ix));
            data.push(at(1, iy));
        }
    }
    Tensor::matrix(steps * steps, 2, data).expect("sized")
}

// ---------------------------------------------------------------- metrics

fn metric_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform(&mut rng, 30, 4, 1.0);
    let ks = [3, 5];

    out.push(record(
        "identity embedding",
        (|| {
            let opts = EvalOptions {
                subsample: 1.0,
                ks: ks.to_vec(),
                seed,
                ..EvalOptions::default()
            };
            let r = evaluate_all("identity", &x, &x, &opts)?;
            let expect = [0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
            let ok = r.values.iter().zip(expect).all(|(v, e)| (v - e).abs() < 1e-12);
            Ok((ok, format!("{:?}", r.values)))
        })(),
    ));

    out.push(record(
        "similarity invariance of rank metrics",
        (|| {
            // rotation, scaling and shift leave neighborhoods and distance ranks unchanged
            let (c, s) = (0.6f64, 0.8f64);
            let mut z = x.clone();
            for i in 0..z.rows() {
                let (a, b) = (z.get2(i, 0), z.get2(i, 1));
                z.set2(i, 0, 3.0 * (c * a - s * b) + 1.0);
                z.set2(i, 1, 3.0 * (s * a + c * b) - 2.0);
                for j in 2..z.cols() {
                    z.set2(i, j, 3.0 * z.get2(i, j));
                }
            }
            let knn = knn_recall(&x, &z, &ks)?;
            let trust = trustworthiness(&x, &z, &ks)?;
            let spear = spearman_distances(&x, &z)?;
            let ok = (knn - 1.0).abs() < 1e-12 && (trust - 1.0).abs() < 1e-12 && (spear - 1.0).abs() < 1e-12;
            Ok((ok, format!("kNN {knn}, Trust {trust}, Spear {spear}")))
        })(),
    ));

    out.push(record(
        "bounds on a random embedding",
        (|| {
            let z = uniform(&mut ChaCha8Rng::seed_from_u64(seed ^ 7), 30, 2, 1.0);
            let knn = knn_recall(&x, &z, &ks)?;
            let trust = trustworthiness(&x, &z, &ks)?;
            let spear = spearman_distances(&x, &z)?;
            let st = stress(&x, &z)?;
            let kl = [kl_sigma(&x, &z, 0.1)?, kl_sigma(&x, &z, 100.0)?];
            let ok = (0.0..=1.0).contains(&knn)
                && trust <= 1.0
                && (-1.0..=1.0).contains(&spear)
                && st > 0.0
                && kl.iter().all(|&k| k >= 0.0);
            Ok((
                ok,
                format!("kNN {knn:.4}, Trust {trust:.4}, Spear {spear:.4}, Stress {st:.4}, KL {kl:?}"),
            ))
        })(),
    ));
    out
}

// ---------------------------------------------------------------- diagnostics

/// `J = R · diag(√λ)` with eigenvalues log-uniform in `[0.1, 10]` and a random rotation.
pub fn random_spd(rng: &mut ChaCha8Rng) -> Result<PullbackMetric<f64>> {
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    let s = [0, 1].map(|_| 10f64.powf(rng.random_range(-1.0..1.0)).sqrt());
    let (c, si) = (t.cos(), t.sin());
    let j = Tensor::matrix(2, 2, vec![c * s[0], -si * s[1], si * s[0], c * s[1]])?;
    PullbackMetric::from_jacobian(&j, vec![0.0, 0.0])
}

fn diagnostic_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(record(
        "indicatrix area (50 metrics, 256 samples)",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let g = random_spd(&mut rng)?;
                let ind = indicatrix_from_metric(&g, [0.0, 0.0], 256)?;
                let expect = std::f64::consts::PI / g.gen_jac_det().sqrt();
                worst = worst.max((ind.area() / expect - 1.0).abs());
            }
            Ok((worst < 0.02, format!("max relative area error {worst:.3e}")))
        })(),
    ));
    out.push(record(
        "constant determinant heatmap",
        (|| {
            let h = heatmap_from_dets(&vec![3.7f64; 50])?;
            let ok = h.raw.iter().all(|v| *v == Some(0.0));
            Ok((ok, format!("clip bounds {:?}", h.clip_bounds)))
        })(),
    ));
    out.push(record(
        "clip bounds are 5%/95% quantiles",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
            let dets: Vec<f64> = (0..100).map(|_| rng.random_range(2.0..20.0)).collect();
            let h = heatmap_from_dets(&dets)?;
            let mut sorted: Vec<f64> = h.raw.iter().flatten().copied().collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let lo = quantile_type7(&sorted, 0.05);
            let hi = quantile_type7(&sorted, 0.95);
            let inside = h.values.iter().flatten().all(|v| (lo..=hi).contains(v));
            Ok((
                h.clip_bounds == (lo, hi) && inside,
                format!("bounds {:?}", h.clip_bounds),
            ))
        })(),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn rel_error_floor() {
        assert_eq!(rel_error(1.0, 1.0), 0.0);
        assert!((rel_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(rel_error(0.0, 1e-12), 1e-12 / REL_FLOOR);
    }

    #[test]
    fn gradcheck_passes() {
        let r = gradcheck_suite(0);
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn invariance_and_diagnostics_pass() {
        for s in [Suite::Invariance, Suite::Metrics, Suite::Diagnostics] {
            let r = run_suite(s, 3);
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn report_text_layout() {
        let r = SuiteReport {
            suite: "x".into(),
            checks: vec![
                CheckResult::new("a", true, "ok".into()),
                CheckResult::new("b", false, "bad".into()),
            ],
        };
        assert_eq!(r.to_text(), "PASS a: ok\nFAIL b: bad\nsuite x: 2 checks, 1 failed\n");
        assert!(!r.passed());
    }
}
