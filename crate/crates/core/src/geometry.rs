//! Decoder Jacobians, pullback metrics and the determinant-based regularizers.
//!
//! The Jacobian of a decoder `D = L_K ∘ elu ∘ … ∘ elu ∘ L_1` at `z` is
//! `W_K · diag(elu'(a_{K-1})) · W_{K-1} ⋯ diag(elu'(a_1)) · W_1`. It is built
//! from ordinary tape ops by pushing the `l` latent basis vectors through the
//! layers, so the result is differentiable in the weights and in `z`.

use crate::autodiff::{det_closed, det_lu, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::mlp::{forward_trace, Mlp, MlpVars};
use crate::scalar::Scalar;

/// Options for [`geometric_loss`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetOptions<T> {
    /// When set, determinants are clamped from below instead of raising
    /// [`Error::NonPositiveDeterminant`].
    pub det_floor: Option<T>,
}

/// Decoder output and stacked tangent vectors for a latent batch `z: [b×l]`.
///
/// Row `j·b + p` of `tangents` is `J_{z_p} D · e_j`.
#[derive(Debug, Clone, Copy)]
pub struct DecoderTangents {
    pub output: Var,
    pub tangents: Var,
    pub batch: usize,
    pub latent_dim: usize,
}

pub fn decoder_tangents<T: Scalar>(tape: &mut Tape<T>, dec: &MlpVars, z: Var) -> Result<DecoderTangents> {
    let (b, l) = match tape.shape(z) {
        [b, l] => (*b, *l),
        s => return Err(Error::shape("decoder_tangents", format!("latent batch {s:?}"))),
    };
    if b == 0 || l == 0 {
        return Err(Error::shape("decoder_tangents", "empty latent batch"));
    }
    let trace = forward_trace(tape, dec, z)?;
    let mut basis = Tensor::zeros(vec![l * b, l]);
    for j in 0..l {
        for p in 0..b {
            basis.set2(j * b + p, j, T::one());
        }
    }
    let basis = tape.constant(basis)?;
    let mut t = tape.matmul_t(basis, dec.layers[0].0)?;
    for (k, &(w, _)) in dec.layers.iter().enumerate().skip(1) {
        let slope = tape.elu_prime(trace.preactivations[k - 1])?;
        let slope = tape.tile_rows(slope, l)?;
        let masked = tape.mul(slope, t)?;
        t = tape.matmul_t(masked, w)?;
    }
    Ok(DecoderTangents {
        output: trace.output,
        tangents: t,
        batch: b,
        latent_dim: l,
    })
}

/// Pullback metrics `JᵗJ` at every row of `z`, shape `[b, l, l]`.
pub fn batch_metric<T: Scalar>(tape: &mut Tape<T>, dec: &MlpVars, z: Var) -> Result<Var> {
    let dt = decoder_tangents(tape, dec, z)?;
    tape.batch_gram(dt.tangents, dt.latent_dim)
}

/// Generalized Jacobian determinants `det(JᵗJ)` at every row of `z`, shape `[b]`.
pub fn batch_gen_jac_det<T: Scalar>(tape: &mut Tape<T>, dec: &MlpVars, z: Var) -> Result<Var> {
    let g = batch_metric(tape, dec, z)?;
    tape.det(g)
}

/// Population variance over the batch of `log det(JᵗJ)`.
pub fn geometric_loss<T: Scalar>(tape: &mut Tape<T>, dec: &MlpVars, z: Var, opts: &DetOptions<T>) -> Result<Var> {
    let det = batch_gen_jac_det(tape, dec, z)?;
    let det = match opts.det_floor {
        Some(floor) => tape.clamp_min(det, floor)?,
        None => {
            if let Some((index, &value)) = tape
                .value(det)
                .data()
                .iter()
                .enumerate()
                .find(|(_, d)| !(**d > T::zero()))
            {
                return Err(Error::NonPositiveDeterminant {
                    index,
                    value: value.as_f64(),
                });
            }
            det
        }
    };
    let logdet = tape.log(det)?;
    tape.variance(logdet)
}

/// Batch mean of `Σ_i (log λ_i(z) − log S)²` with `S` the mean metric eigenvalue
/// over the batch. Requires `l <= 2`.
pub fn lee_loss<T: Scalar>(tape: &mut Tape<T>, dec: &MlpVars, z: Var) -> Result<Var> {
    let g = batch_metric(tape, dec, z)?;
    let lam = tape.sym_eigvals(g)?;
    let l = tape.shape(lam)[1];
    if let Some((i, &value)) = tape
        .value(lam)
        .data()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > T::zero()))
    {
        return Err(Error::NonPositiveEigenvalue {
            index: i / l,
            value: value.as_f64(),
        });
    }
    let b = tape.shape(lam)[0];
    let s = tape.mean(lam)?;
    let log_s = tape.log(s)?;
    let log_lam = tape.log(lam)?;
    let centered = tape.sub_scalar(log_lam, log_s)?;
    let sq = tape.square(centered)?;
    let total = tape.sum(sq)?;
    tape.scale(total, T::one() / T::lit(b as f64))
}

/// Pullback metric at one latent point.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackMetric<T> {
    pub g: Tensor<T>,
    pub base_point: Vec<T>,
}

impl<T: Scalar> PullbackMetric<T> {
    /// `g = JᵗJ` for a Jacobian `J: [n×l]`.
    pub fn from_jacobian(j: &Tensor<T>, base_point: Vec<T>) -> Result<Self> {
        if j.rank() != 2 || j.rows() < j.cols() {
            return Err(Error::shape(
                "pullback_metric",
                format!("jacobian {:?} needs n >= l", j.shape()),
            ));
        }
        let g = j.transpose().matmul(j)?;
        Ok(Self { g, base_point })
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    /// `det(g)`.
    pub fn gen_jac_det(&self) -> T {
        let l = self.dim();
        if l <= 3 {
            det_closed(self.g.data(), l)
        } else {
            det_lu(&self.g).unwrap_or(T::zero())
        }
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> Vec<T> {
        sym_eigenvalues(&self.g)
    }

    /// `λ_max / λ_min`.
    pub fn condition_number(&self) -> Result<T> {
        let ev = self.eigenvalues();
        let (hi, lo) = (ev[0], ev[ev.len() - 1]);
        if !(lo > T::zero()) {
            return Err(Error::NonPositiveEigenvalue {
                index: 0,
                value: lo.as_f64(),
            });
        }
        Ok(hi / lo)
    }

    /// `vᵗ g w`.
    pub fn inner(&self, v: &[T], w: &[T]) -> T {
        let l = self.dim();
        let mut s = T::zero();
        for i in 0..l {
            for j in 0..l {
                s = s + v[i] * self.g.get2(i, j) * w[j];
            }
        }
        s
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, largest first.
pub fn sym_eigenvalues<T: Scalar>(m: &Tensor<T>) -> Vec<T> {
    let n = m.rows();
    if n == 2 {
        let d = m.data();
        let (hi, lo) = crate::autodiff::sym2_eigvals(d[0], d[1], d[2], d[3]);
        return vec![hi, lo];
    }
    let mut a = m.data().to_vec();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= T::epsilon() * T::epsilon() * a.iter().map(|&x| x * x).sum::<T>() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

fn latent_batch<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>) -> Result<()> {
    if z.rank() != 2 || z.cols() != decoder.input_dim() {
        return Err(Error::shape(
            "latent batch",
            format!("{:?} for decoder taking {}", z.shape(), decoder.input_dim()),
        ));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite { op: "latent batch" });
    }
    Ok(())
}

/// Jacobians `[n×l]` of the decoder at every row of `z: [b×l]`.
pub fn decoder_jacobians<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
    latent_batch(decoder, z)?;
    let mut tape = Tape::new();
    let vars = decoder.register(&mut tape, false)?;
    let zv = tape.constant(z.clone())?;
    let dt = decoder_tangents(&mut tape, &vars, zv)?;
    let t = tape.value(dt.tangents);
    let (b, l, n) = (dt.batch, dt.latent_dim, t.cols());
    Ok((0..b)
        .map(|p| {
            let mut j = Tensor::zeros(vec![n, l]);
            for c in 0..l {
                for (r, &v) in t.row(c * b + p).iter().enumerate() {
                    j.set2(r, c, v);
                }
            }
            j
        })
        .collect())
}

/// Jacobian of the decoder at a single latent point.
pub fn decoder_jacobian<T: Scalar>(decoder: &Mlp<T>, z: &[T]) -> Result<Tensor<T>> {
    let zt = Tensor::matrix(1, z.len(), z.to_vec())?;
    Ok(decoder_jacobians(decoder, &zt)?.remove(0))
}

/// Pullback metrics at every row of `z`.
pub fn pullback_metrics<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>) -> Result<Vec<PullbackMetric<T>>> {
    latent_batch(decoder, z)?;
    let mut tape = Tape::new();
    let vars = decoder.register(&mut tape, false)?;
    let zv = tape.constant(z.clone())?;
    let g = batch_metric(&mut tape, &vars, zv)?;
    let gv = tape.value(g);
    let l = z.cols();
    Ok((0..z.rows())
        .map(|p| PullbackMetric {
            g: Tensor::matrix(l, l, gv.data()[p * l * l..(p + 1) * l * l].to_vec()).expect("l×l block"),
            base_point: z.row(p).to_vec(),
        })
        .collect())
}

/// Detached value of [`geometric_loss`].
pub fn geometric_loss_value<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>, opts: &DetOptions<T>) -> Result<T> {
    latent_batch(decoder, z)?;
    let mut tape = Tape::new();
    let vars = decoder.register(&mut tape, false)?;
    let zv = tape.constant(z.clone())?;
    let loss = geometric_loss(&mut tape, &vars, zv, opts)?;
    Ok(tape.value(loss).item())
}

/// Detached value of [`lee_loss`].
pub fn lee_loss_value<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>) -> Result<T> {
    latent_batch(decoder, z)?;
    let mut tape = Tape::new();
    let vars = decoder.register(&mut tape, false)?;
    let zv = tape.constant(z.clone())?;
    let loss = lee_loss(&mut tape, &vars, zv)?;
    Ok(tape.value(loss).item())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor<f64> {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_decoder_jacobian_is_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_matrix(&mut rng, 4, 2);
        let dec = Mlp::linear(w.clone(), Tensor::vector(vec![0.5; 4])).unwrap();
        let j = decoder_jacobian(&dec, &[0.3, -1.2]).unwrap();
        assert_eq!(j, w);
    }

    #[test]
    fn identity_two_layer_with_positive_preactivations() {
        let id = Tensor::<f64>::identity(2);
        let dec = Mlp::new(vec![
            crate::nn::Layer::new(id.clone(), Tensor::vector(vec![5.0, 5.0])).unwrap(),
            crate::nn::Layer::new(id.clone(), Tensor::vector(vec![0.0, 0.0])).unwrap(),
        ])
        .unwrap();
        let j = decoder_jacobian(&dec, &[0.1, 0.2]).unwrap();
        assert_eq!(j, id);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let dec = Mlp::<f64>::init(&[2, 8, 3], 11).unwrap();
        let z = [0.4, -0.7];
        let j = decoder_jacobian(&dec, &z).unwrap();
        let h = 1e-5;
        for c in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[c] += h;
            zm[c] -= h;
            let fp = dec.apply(&Tensor::matrix(1, 2, zp.to_vec()).unwrap()).unwrap();
            let fm = dec.apply(&Tensor::matrix(1, 2, zm.to_vec()).unwrap()).unwrap();
            for r in 0..3 {
                let fd = (fp.data()[r] - fm.data()[r]) / (2.0 * h);
                let an = j.get2(r, c);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "({r},{c}) fd {fd} an {an}");
            }
        }
    }

    #[test]
    fn metric_of_padded_identity() {
        let j = Tensor::matrix(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let g = PullbackMetric::from_jacobian(&j, vec![0.0, 0.0]).unwrap();
        assert_eq!(g.g, Tensor::identity(2));
        assert_eq!(g.gen_jac_det(), 1.0);
        assert_eq!(g.condition_number().unwrap(), 1.0);
    }

    #[test]
    fn metric_of_diagonal_jacobian() {
        let j = Tensor::matrix(3, 2, vec![2.0, 0.0, 0.0, 3.0, 0.0, 0.0]).unwrap();
        let g = PullbackMetric::from_jacobian(&j, vec![0.0, 0.0]).unwrap();
        assert_eq!(g.g.data(), &[4.0, 0.0, 0.0, 9.0]);
        assert_eq!(g.gen_jac_det(), 36.0);
        assert_eq!(g.eigenvalues(), vec![9.0, 4.0]);
    }

    #[test]
    fn metric_inner_matches_pushforward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = random_matrix(&mut rng, 5, 2);
        let g = PullbackMetric::from_jacobian(&j, vec![0.0, 0.0]).unwrap();
        for _ in 0..10 {
            let v: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jv = j.matmul(&Tensor::matrix(2, 1, v.clone()).unwrap()).unwrap();
            let jw = j.matmul(&Tensor::matrix(2, 1, w.clone()).unwrap()).unwrap();
            let direct: f64 = jv.data().iter().zip(jw.data()).map(|(a, b)| a * b).sum();
            let via = g.inner(&v, &w);
            assert!((direct - via).abs() <= 1e-12 * direct.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn square_jacobian_det_is_classical_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let j = random_matrix(&mut rng, 2, 2);
        let d = j.data()[0] * j.data()[3] - j.data()[1] * j.data()[2];
        let g = PullbackMetric::from_jacobian(&j, vec![0.0, 0.0]).unwrap();
        assert!((g.gen_jac_det() - d * d).abs() < 1e-14);
    }

    #[test]
    fn jacobi_eigenvalues_match_closed_form_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 4, 4);
        let s = a.transpose().matmul(&a).unwrap();
        let ev = sym_eigenvalues(&s);
        let trace: f64 = (0..4).map(|i| s.get2(i, i)).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-12);
        let prod: f64 = ev.iter().product();
        assert!((prod - det_lu(&s).unwrap()).abs() < 1e-10 * prod.abs().max(1.0));
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singleton_batch_has_zero_loss() {
        let dec = Mlp::<f64>::init(&[2, 6, 3], 2).unwrap();
        let z = Tensor::matrix(1, 2, vec![0.2, 0.1]).unwrap();
        assert_eq!(geometric_loss_value(&dec, &z, &DetOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn linear_decoder_has_zero_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dec = Mlp::linear(random_matrix(&mut rng, 3, 2), Tensor::vector(vec![0.0; 3])).unwrap();
        let z = random_matrix(&mut rng, 16, 2);
        let v = geometric_loss_value(&dec, &z, &DetOptions::default()).unwrap();
        assert!(v < 1e-20, "{v}");
    }

    #[test]
    fn first_layer_scaling_is_invisible() {
        let mut dec = Mlp::<f64>::init(&[2, 7, 7, 3], 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let z = random_matrix(&mut rng, 10, 2);
        let base = geometric_loss_value(&dec, &z, &DetOptions::default()).unwrap();
        dec.scale_layer_weights(0, 2.0);
        let scaled = geometric_loss_value(&dec, &z.scaled(0.5), &DetOptions::default()).unwrap();
        assert!((base - scaled).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_decoder_reports_index() {
        let w = Tensor::matrix(3, 2, vec![1.0, 2.0, 2.0, 4.0, 0.0, 0.0]).unwrap();
        let dec = Mlp::linear(w, Tensor::vector(vec![0.0; 3])).unwrap();
        let z = Tensor::matrix(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        match geometric_loss_value(&dec, &z, &DetOptions::default()) {
            Err(Error::NonPositiveDeterminant { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected non-positive determinant, got {other:?}"),
        }
        let floored = geometric_loss_value(&dec, &z, &DetOptions { det_floor: Some(1e-12) }).unwrap();
        assert_eq!(floored, 0.0);
    }

    #[test]
    fn lee_loss_cases() {
        let z = Tensor::matrix(3, 2, vec![0.0, 0.0, 1.0, 2.0, -1.0, 0.5]).unwrap();
        let pad = |d: [f64; 2]| Tensor::matrix(3, 2, vec![d[0], 0.0, 0.0, d[1], 0.0, 0.0]).unwrap();
        let zero = Tensor::vector(vec![0.0; 3]);
        let iso = Mlp::linear(pad([1.0, 1.0]), zero.clone()).unwrap();
        assert!(lee_loss_value(&iso, &z).unwrap().abs() < 1e-15);
        let scaled = Mlp::linear(pad([3.0, 3.0]), zero.clone()).unwrap();
        assert!(lee_loss_value(&scaled, &z).unwrap().abs() < 1e-15);
        // g = diag(1, 4): λ = (4, 1), S = 2.5
        let aniso = Mlp::linear(pad([1.0, 2.0]), zero).unwrap();
        let expected = (4f64.ln() - 2.5f64.ln()).powi(2) + (1f64.ln() - 2.5f64.ln()).powi(2);
        let lee = lee_loss_value(&aniso, &z).unwrap();
        assert!((lee - expected).abs() < 1e-14, "{lee} vs {expected}");
        assert!(geometric_loss_value(&aniso, &z, &DetOptions::default()).unwrap() < 1e-20);
    }
}
