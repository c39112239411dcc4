//! PCA by singular value decomposition, PCA as a linear autoencoder, and
//! harnesses comparing trained linear autoencoders with PCA.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::geometry::decoder_jacobians;
use crate::nn::{AdamConfig, AdamState, Autoencoder, Mlp};

fn to_na(t: &Tensor<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.rows(), t.cols(), t.data())
}

fn from_na(m: &DMatrix<f64>) -> Tensor<f64> {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(m[(i, j)]);
        }
    }
    Tensor::matrix(m.nrows(), m.ncols(), data).expect("sizes agree")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `[l × n]`, orthonormal rows.
    pub components: Tensor<f64>,
    pub mean: Vec<f64>,
    /// All singular values of the centered data, descending.
    pub singular_values: Vec<f64>,
    /// Set when the `l`-th and `(l+1)`-th singular values are too close for
    /// the subspace to be unique.
    pub warning: Option<String>,
}

impl Pca {
    pub fn latent_dim(&self) -> usize {
        self.components.rows()
    }

    fn centered(&self, x: &Tensor<f64>) -> Tensor<f64> {
        let n = self.mean.len();
        let mut c = x.clone();
        for (k, v) in c.data_mut().iter_mut().enumerate() {
            *v -= self.mean[k % n];
        }
        c
    }

    pub fn encode(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        self.centered(x).matmul(&self.components.transpose())
    }

    pub fn decode(&self, z: &Tensor<f64>) -> Result<Tensor<f64>> {
        let mut out = z.matmul(&self.components)?;
        let n = self.mean.len();
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            *v += self.mean[k % n];
        }
        Ok(out)
    }
}

/// Top-`l` principal directions of `x: [m × n]`.
pub fn pca_fit(x: &Tensor<f64>, l: usize) -> Result<Pca> {
    if x.rank() != 2 || l == 0 || l > x.cols() || x.rows() <= l {
        return Err(Error::Invalid(format!("PCA with l = {l} on data {:?}", x.shape())));
    }
    let (m, n) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| x.get2(i, j)).sum::<f64>() / m as f64)
        .collect();
    let mut c = to_na(x);
    for j in 0..n {
        for i in 0..m {
            c[(i, j)] -= mean[j];
        }
    }
    let svd = c.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let tol = sv[0].max(1.0) * 1e-12;
    if sv.len() < l || sv[l - 1] <= tol {
        return Err(Error::Degenerate(format!("data has rank below {l}")));
    }
    let warning = match sv.get(l) {
        Some(&next) if sv[l - 1] - next <= 1e-10 * sv[0] => Some(format!(
            "singular values {} and {} coincide; the principal subspace is not unique",
            sv[l - 1],
            next
        )),
        _ => None,
    };
    let mut comp = Vec::with_capacity(l * n);
    for &r in order.iter().take(l) {
        comp.extend((0..n).map(|j| vt[(r, j)]));
    }
    Ok(Pca {
        components: Tensor::matrix(l, n, comp)?,
        mean,
        singular_values: sv,
        warning,
    })
}

/// Encoder `z = W(x − μ)` and decoder `x = Wᵗz + μ` as single linear layers.
pub fn pca_as_autoencoder(pca: &Pca) -> Result<Autoencoder<f64>> {
    let w = &pca.components;
    let mu = Tensor::matrix(pca.mean.len(), 1, pca.mean.clone())?;
    let enc_bias = w.matmul(&mu)?.scaled(-1.0).reshape(vec![w.rows()])?;
    let encoder = Mlp::linear(w.clone(), enc_bias)?;
    let decoder = Mlp::linear(w.transpose(), Tensor::vector(pca.mean.clone()))?;
    Autoencoder::new(encoder, decoder)
}

/// Sum of squared reconstruction errors over all entries.
pub fn squared_error(x: &Tensor<f64>, x_hat: &Tensor<f64>) -> f64 {
    x.data().iter().zip(x_hat.data()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Principal angles (radians, ascending) between the column spaces of `a` and `b`.
pub fn principal_angles(a: &Tensor<f64>, b: &Tensor<f64>) -> Result<Vec<f64>> {
    if a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows() {
        return Err(Error::shape(
            "principal_angles",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let qa = to_na(a).qr().q();
    let qb = to_na(b).qr().q();
    let s = (qa.transpose() * qb).singular_values();
    let mut angles: Vec<f64> = s.iter().map(|&c| c.clamp(-1.0, 1.0).acos()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(angles)
}

pub fn singular_values(a: &Tensor<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> Tensor<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    from_na(&q)
}

/// `m` samples of a zero-mean Gaussian with standard deviations `stds` along
/// the axes of a random rotation, centered to zero sample mean.
pub fn rotated_gaussian(m: usize, stds: &[f64], seed: u64) -> Result<Tensor<f64>> {
    let n = stds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = random_rotation(n, &mut rng);
    let raw: Vec<f64> = (0..m * n)
        .map(|k| stds[k % n] * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let x = Tensor::matrix(m, n, raw)?.matmul(&rot.transpose())?;
    let mean: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| x.get2(i, j)).sum::<f64>() / m as f64)
        .collect();
    let mut x = x;
    for (k, v) in x.data_mut().iter_mut().enumerate() {
        *v -= mean[k % n];
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearAeConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl Default for LinearAeConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            learning_rate: 1e-2,
            weight_decay: 1e-4,
        }
    }
}

/// Bias-free linear autoencoder weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAe {
    /// `[l × n]`
    pub encoder: Tensor<f64>,
    /// `[n × l]`
    pub decoder: Tensor<f64>,
    pub final_loss: f64,
}

impl LinearAe {
    pub fn as_autoencoder(&self) -> Result<Autoencoder<f64>> {
        let (l, n) = (self.encoder.rows(), self.encoder.cols());
        Autoencoder::new(
            Mlp::linear(self.encoder.clone(), Tensor::zeros(vec![l]))?,
            Mlp::linear(self.decoder.clone(), Tensor::zeros(vec![n]))?,
        )
    }
}

/// Full-batch Adam on the mean squared reconstruction error of `x ↦ D E x`.
pub fn train_linear_ae(x: &Tensor<f64>, l: usize, seed: u64, cfg: &LinearAeConfig) -> Result<LinearAe> {
    let n = x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| {
        let bound = 1.0 / (cols as f64).sqrt();
        Tensor::matrix(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect(),
        )
    };
    let mut e = draw(l, n)?;
    let mut d = draw(n, l)?;
    let adam_cfg = AdamConfig {
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new([&e, &d]);
    let mut final_loss = f64::NAN;
    for _ in 0..cfg.steps {
        let mut tape = Tape::new();
        let ev = tape.leaf(e.clone())?;
        let dv = tape.leaf(d.clone())?;
        let xv = tape.constant(x.clone())?;
        let z = tape.matmul_t(xv, ev)?;
        let xh = tape.matmul_t(z, dv)?;
        let loss = crate::nn::reconstruction_loss(&mut tape, xv, xh)?;
        final_loss = tape.value(loss).item();
        tape.backward(loss)?;
        let grads = [tape.grad(ev), tape.grad(dv)];
        adam.step([&mut e, &mut d], &grads, &adam_cfg)?;
    }
    Ok(LinearAe {
        encoder: e,
        decoder: d,
        final_loss,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceReport {
    pub principal_angles: Vec<f64>,
    pub max_principal_angle: f64,
    /// Singular values of `A = E·Wᵗ`, descending.
    pub mixing_singular_values: Vec<f64>,
    /// Frobenius norm of `D·E − WᵗW`.
    pub projection_gap: f64,
    pub final_loss: f64,
    /// Loss finite and the decoder has full column rank.
    pub converged: bool,
}

impl SubspaceReport {
    pub fn max_mixing_deviation(&self) -> f64 {
        self.mixing_singular_values
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        format!(
            "max_principal_angle {:e}\nmixing_singular_values {}\nprojection_gap {:e}\nfinal_loss {:e}\nconverged {}\n",
            self.max_principal_angle,
            self.mixing_singular_values
                .iter()
                .map(|s| format!("{s:?}"))
                .collect::<Vec<_>>()
                .join(" "),
            self.projection_gap,
            self.final_loss,
            self.converged
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,value\n");
        s += &format!("max_principal_angle,{:?}\n", self.max_principal_angle);
        for (i, v) in self.mixing_singular_values.iter().enumerate() {
            s += &format!("mixing_singular_value_{i},{v:?}\n");
        }
        s += &format!(
            "projection_gap,{:?}\nfinal_loss,{:?}\nconverged,{}\n",
            self.projection_gap, self.final_loss, self.converged
        );
        s
    }
}

/// Trains a bias-free linear autoencoder on centered `x` and compares it with PCA.
pub fn linear_ae_subspace_report(x: &Tensor<f64>, l: usize, seed: u64, cfg: &LinearAeConfig) -> Result<SubspaceReport> {
    let pca = pca_fit(x, l)?;
    let ae = train_linear_ae(x, l, seed, cfg)?;
    let w = &pca.components;
    let angles = principal_angles(&ae.decoder, &w.transpose())?;
    let mixing = ae.encoder.matmul(&w.transpose())?;
    let de = ae.decoder.matmul(&ae.encoder)?;
    let proj = w.transpose().matmul(w)?;
    let gap = de
        .data()
        .iter()
        .zip(proj.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let dsv = singular_values(&ae.decoder);
    let converged = ae.final_loss.is_finite() && dsv[dsv.len() - 1] > 1e-8;
    Ok(SubspaceReport {
        max_principal_angle: angles.iter().copied().fold(0.0, f64::max),
        principal_angles: angles,
        mixing_singular_values: singular_values(&mixing),
        projection_gap: gap,
        final_loss: ae.final_loss,
        converged,
    })
}

/// Mean over points and decoder Jacobian columns of `|cos|` of the angle
/// between the residual `x − D(E(x))` and the column. Zero residuals count as 0.
pub fn orthogonality_residual(ae: &Autoencoder<f64>, x: &Tensor<f64>) -> Result<f64> {
    let z = ae.encode(x)?;
    let xh = ae.decode(&z)?;
    let jacs = decoder_jacobians(&ae.decoder, &z)?;
    let l = z.cols();
    let mut total = 0.0;
    for (i, j) in jacs.iter().enumerate() {
        let r: Vec<f64> = x.row(i).iter().zip(xh.row(i)).map(|(a, b)| a - b).collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..l {
            let col: Vec<f64> = (0..j.rows()).map(|k| j.get2(k, c)).collect();
            let cn = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn > 0.0 && cn > 0.0 {
                let dot: f64 = r.iter().zip(&col).map(|(a, b)| a * b).sum();
                total += (dot / (rn * cn)).abs();
            }
        }
    }
    Ok(total / (x.rows() * l) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pullback_metrics;

    #[test]
    fn line_data_gives_axis() {
        let x = Tensor::matrix(4, 3, vec![-1.5, 0.0, 0.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        let p = pca_fit(&x, 1).unwrap();
        assert!((p.components.data()[0].abs() - 1.0).abs() < 1e-12);
        assert!(p.components.data()[1].abs() < 1e-12 && p.components.data()[2].abs() < 1e-12);
    }

    #[test]
    fn components_are_orthonormal() {
        let x = rotated_gaussian(100, &[3.0, 2.0, 1.0, 0.5], 1).unwrap();
        let p = pca_fit(&x, 2).unwrap();
        let g = p.components.matmul(&p.components.transpose()).unwrap();
        assert!(g.max_abs_diff(&Tensor::identity(2)) < 1e-10);
        assert!(p.warning.is_none());
    }

    #[test]
    fn autoencoder_is_orthogonal_projection() {
        let x = rotated_gaussian(50, &[4.0, 1.0, 0.3], 2).unwrap().map(|v| v + 1.0);
        let p = pca_fit(&x, 2).unwrap();
        let ae = pca_as_autoencoder(&p).unwrap();
        let xh = ae.reconstruct(&x).unwrap();
        let direct = p.decode(&p.encode(&x).unwrap()).unwrap();
        assert!(xh.max_abs_diff(&direct) < 1e-12);
        for g in pullback_metrics(&ae.decoder, &ae.encode(&x).unwrap()).unwrap() {
            assert!((g.gen_jac_det() - 1.0).abs() < 1e-12);
            assert!((g.condition_number().unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(orthogonality_residual(&ae, &x).unwrap() < 1e-10);
    }

    #[test]
    fn rank_deficient_data_is_rejected() {
        let x = Tensor::matrix(3, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        assert!(matches!(pca_fit(&x, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn principal_angles_basic() {
        let a = Tensor::matrix(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let b = Tensor::matrix(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        let ang = principal_angles(&a, &b).unwrap();
        assert!((ang[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
