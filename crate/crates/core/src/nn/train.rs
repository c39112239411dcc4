use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::geometry::{geometric_loss, lee_loss, DetOptions};
use crate::nn::adam::{AdamConfig, AdamState};
use crate::nn::mlp::{forward, reconstruction_loss, Mlp};
use crate::scalar::Scalar;

/// Extra loss term added to the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    None,
    Geometric,
    Lee,
}

impl Regularizer {
    pub fn name(self) -> &'static str {
        match self {
            Regularizer::None => "none",
            Regularizer::Geometric => "geometric",
            Regularizer::Lee => "lee",
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "vanilla" => Ok(Regularizer::None),
            "geometric" => Ok(Regularizer::Geometric),
            "lee" => Ok(Regularizer::Lee),
            other => Err(Error::Invalid(format!("unknown regularizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub alpha: f64,
    pub seed: u64,
    pub regularizer: Regularizer,
    /// Clamp determinants from below instead of failing on non-immersions.
    pub det_floor: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 125,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            alpha: 0.1,
            seed: 0,
            regularizer: Regularizer::Geometric,
            det_floor: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Invalid(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Invalid(
                "learning rate must be positive and weight decay non-negative".into(),
            ));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

/// Encoder/decoder pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    pub encoder: Mlp<T>,
    pub decoder: Mlp<T>,
}

impl<T: Scalar> Autoencoder<T> {
    pub fn new(encoder: Mlp<T>, decoder: Mlp<T>) -> Result<Self> {
        if encoder.output_dim() != decoder.input_dim() {
            return Err(Error::shape(
                "autoencoder",
                format!(
                    "encoder outputs {} but decoder takes {}",
                    encoder.output_dim(),
                    decoder.input_dim()
                ),
            ));
        }
        if encoder.input_dim() != decoder.output_dim() {
            return Err(Error::shape(
                "autoencoder",
                format!(
                    "encoder takes {} but decoder outputs {}",
                    encoder.input_dim(),
                    decoder.output_dim()
                ),
            ));
        }
        Ok(Self { encoder, decoder })
    }

    /// Encoder `n-h1-…-l` and the mirrored decoder, both from one seed.
    pub fn init(input_dim: usize, hidden: &[usize], latent_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut enc_dims = vec![input_dim];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(latent_dim);
        let dec_dims: Vec<usize> = enc_dims.iter().rev().copied().collect();
        let encoder = Mlp::init_with(&enc_dims, &mut rng)?;
        let decoder = Mlp::init_with(&dec_dims, &mut rng)?;
        Self::new(encoder, decoder)
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.encoder.apply(x)
    }

    pub fn decode(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        self.decoder.apply(z)
    }

    pub fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.decode(&self.encode(x)?)
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.encoder.params().chain(self.decoder.params())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.encoder.params_mut().chain(self.decoder.params_mut())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Size-weighted mean of the minibatch reconstruction losses.
    pub rec_loss: f64,
    /// Mean over minibatches of the regularizer value: the determinant loss
    /// for `none` and `geometric`, the Lee loss for `lee`. NaN when it could
    /// not be evaluated (only possible for unregularized runs).
    pub reg_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub regularizer: Regularizer,
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn write_csv_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,rec_loss,reg_loss")?;
        for r in &self.records {
            writeln!(w, "{},{:?},{:?}", r.epoch, r.rec_loss, r.reg_loss)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

struct StepOutcome {
    rec: f64,
    reg: f64,
}

fn train_step<T: Scalar>(
    ae: &mut Autoencoder<T>,
    adam: &mut AdamState<T>,
    xb: Tensor<T>,
    cfg: &TrainConfig,
    adam_cfg: &AdamConfig,
) -> Result<StepOutcome> {
    let mut tape = Tape::new();
    let enc = ae.encoder.register(&mut tape, true)?;
    let dec = ae.decoder.register(&mut tape, true)?;
    let x = tape.constant(xb)?;
    let z = forward(&mut tape, &enc, x)?;
    let x_hat = forward(&mut tape, &dec, z)?;
    let rec = reconstruction_loss(&mut tape, x, x_hat)?;
    let opts = DetOptions {
        det_floor: cfg.det_floor.map(T::lit),
    };

    let (loss, reg) = match cfg.regularizer {
        Regularizer::None => {
            // Logged only; recorded after the loss node so it stays out of the gradient.
            let reg = geometric_loss(&mut tape, &dec, z, &opts)
                .map(|v| tape.value(v).item().as_f64())
                .unwrap_or(f64::NAN);
            (rec, reg)
        }
        Regularizer::Geometric | Regularizer::Lee => {
            let r = if cfg.regularizer == Regularizer::Geometric {
                geometric_loss(&mut tape, &dec, z, &opts)?
            } else {
                lee_loss(&mut tape, &dec, z)?
            };
            let weighted = tape.scale(r, T::lit(cfg.alpha))?;
            let total = tape.add(rec, weighted)?;
            (total, tape.value(r).item().as_f64())
        }
    };
    let rec_value = tape.value(rec).item().as_f64();
    tape.backward(loss)?;
    let grads: Vec<_> = enc.params().chain(dec.params()).map(|v| tape.grad(v)).collect();
    adam.step(ae.params_mut(), &grads, adam_cfg)?;
    Ok(StepOutcome { rec: rec_value, reg })
}

/// Minibatch Adam training of `rec + α · reg`.
///
/// Batches are drawn without replacement from a fresh permutation every
/// epoch. Any failure inside a step aborts training with [`Error::Diverged`].
pub fn train<T: Scalar>(ae: &mut Autoencoder<T>, x: &Tensor<T>, cfg: &TrainConfig) -> Result<TrainingLog> {
    train_with_callback(ae, x, cfg, |_| {})
}

/// [`train`] with a hook called after every epoch.
pub fn train_with_callback<T: Scalar>(
    ae: &mut Autoencoder<T>,
    x: &Tensor<T>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainingLog> {
    cfg.validate()?;
    if x.rank() != 2 || x.rows() == 0 {
        return Err(Error::Invalid("training data must be a nonempty matrix".into()));
    }
    if x.cols() != ae.encoder.input_dim() {
        return Err(Error::shape(
            "train",
            format!(
                "data has {} columns, encoder takes {}",
                x.cols(),
                ae.encoder.input_dim()
            ),
        ));
    }
    let m = x.rows();
    let adam_cfg = cfg.adam();
    let mut adam = AdamState::new(ae.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let (mut rec_sum, mut reg_sum, mut batches) = (0.0, 0.0, 0usize);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let out = train_step(ae, &mut adam, x.select_rows(idx), cfg, &adam_cfg).map_err(|e| Error::Diverged {
                epoch,
                batch,
                detail: format!("{} ({})", e, e.kind()),
            })?;
            rec_sum += out.rec * idx.len() as f64;
            reg_sum += out.reg;
            batches += 1;
        }
        let record = EpochRecord {
            epoch,
            rec_loss: rec_sum / m as f64,
            reg_loss: reg_sum / batches as f64,
        };
        on_epoch(&record);
        records.push(record);
    }
    Ok(TrainingLog {
        regularizer: cfg.regularizer,
        records,
    })
}

/// Reconstruction and determinant losses of a trained model, averaged over
/// consecutive batches of `batch_size` rows in data order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSummary {
    pub rec_loss: f64,
    pub det_loss: f64,
}

pub fn evaluate_losses<T: Scalar>(ae: &Autoencoder<T>, x: &Tensor<T>, batch_size: usize) -> Result<LossSummary> {
    if batch_size == 0 || x.rank() != 2 || x.rows() == 0 {
        return Err(Error::Invalid(
            "evaluation needs a nonempty matrix and batch size >= 1".into(),
        ));
    }
    let order: Vec<usize> = (0..x.rows()).collect();
    let (mut rec_sum, mut det_sum, mut batches) = (0.0, 0.0, 0usize);
    for idx in order.chunks(batch_size) {
        let xb = x.select_rows(idx);
        let mut tape = Tape::new();
        let enc = ae.encoder.register(&mut tape, false)?;
        let dec = ae.decoder.register(&mut tape, false)?;
        let xv = tape.constant(xb)?;
        let z = forward(&mut tape, &enc, xv)?;
        let x_hat = forward(&mut tape, &dec, z)?;
        let rec = reconstruction_loss(&mut tape, xv, x_hat)?;
        rec_sum += tape.value(rec).item().as_f64() * idx.len() as f64;
        let det = geometric_loss(&mut tape, &dec, z, &DetOptions::default())?;
        det_sum += tape.value(det).item().as_f64();
        batches += 1;
    }
    Ok(LossSummary {
        rec_loss: rec_sum / x.rows() as f64,
        det_loss: det_sum / batches as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_data(m: usize, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(m * 3);
        for _ in 0..m {
            let t: f64 = rng.random_range(-1.0..1.0);
            let s: f64 = rng.random_range(-1.0..1.0);
            data.extend_from_slice(&[t, s, t * t - s * 0.5]);
        }
        Tensor::matrix(m, 3, data).unwrap()
    }

    fn small_cfg(reg: Regularizer, alpha: f64) -> TrainConfig {
        TrainConfig {
            epochs: 4,
            batch_size: 16,
            learning_rate: 1e-2,
            alpha,
            regularizer: reg,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let x = toy_data(64, 1);
        let run = || {
            let mut ae = Autoencoder::<f64>::init(3, &[8, 8], 2, 5).unwrap();
            let log = train(&mut ae, &x, &small_cfg(Regularizer::Geometric, 0.1)).unwrap();
            (ae, log)
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.to_csv(), lb.to_csv());
    }

    #[test]
    fn zero_alpha_matches_vanilla() {
        let x = toy_data(64, 2);
        let mut a = Autoencoder::<f64>::init(3, &[8], 2, 6).unwrap();
        let mut b = a.clone();
        let la = train(&mut a, &x, &small_cfg(Regularizer::Geometric, 0.0)).unwrap();
        let lb = train(&mut b, &x, &small_cfg(Regularizer::None, 0.1)).unwrap();
        assert_eq!(a, b);
        let rec = |l: &TrainingLog| l.records.iter().map(|r| r.rec_loss).collect::<Vec<_>>();
        assert_eq!(rec(&la), rec(&lb));
    }

    #[test]
    fn reconstruction_improves() {
        let x = toy_data(128, 3);
        let mut ae = Autoencoder::<f64>::init(3, &[16, 16], 2, 7).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..small_cfg(Regularizer::None, 0.0)
        };
        let log = train(&mut ae, &x, &cfg).unwrap();
        assert!(log.records.last().unwrap().rec_loss < log.records[0].rec_loss);
    }

    #[test]
    fn csv_layout() {
        let log = TrainingLog {
            regularizer: Regularizer::None,
            records: vec![EpochRecord {
                epoch: 0,
                rec_loss: 0.5,
                reg_loss: f64::NAN,
            }],
        };
        assert_eq!(log.to_csv(), "epoch,rec_loss,reg_loss\n0,0.5,NaN\n");
    }

    #[test]
    fn rejects_bad_config_and_data() {
        let x = toy_data(8, 4);
        let mut ae = Autoencoder::<f64>::init(3, &[4], 2, 1).unwrap();
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&mut ae, &x, &cfg), Err(Error::Invalid(_))));
        let wrong = Tensor::zeros(vec![4, 5]);
        assert!(train(&mut ae, &wrong, &TrainConfig::default()).is_err());
    }

    #[test]
    fn regularizer_names_round_trip() {
        for r in [Regularizer::None, Regularizer::Geometric, Regularizer::Lee] {
            assert_eq!(r.name().parse::<Regularizer>().unwrap(), r);
        }
        assert_eq!("vanilla".parse::<Regularizer>().unwrap(), Regularizer::None);
    }
}
