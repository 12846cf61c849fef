//! Variational autoencoder over standardized pose frames.
//!
//! The encoder ends in a `2·d` head: the first `d` outputs are the latent
//! means, the remaining `d` the log-variances. Log-variances are clamped to
//! `[-10, 10]` wherever they are exponentiated. The mapping used downstream
//! is the encoder means only.

mod checkpoint;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use train::{train, EpochRecord, LossRecord, TrainConfig, TrainHistory};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{PoseFrame, StandardizationStats, POSE_DIM};
use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Gradients, Network};
use crate::LATENT_DIM;

pub const LOGVAR_CLAMP: f64 = 10.0;

#[inline]
pub fn clamp_logvar(lv: f64) -> f64 {
    lv.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP)
}

/// Hidden-layer layout. The decoder mirrors the encoder's hidden widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            input_dim: POSE_DIM,
            latent_dim: LATENT_DIM,
            hidden: vec![64, 32],
            hidden_activation: Activation::Relu,
        }
    }
}

impl ArchConfig {
    fn encoder_widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(&self.hidden);
        w.push(2 * self.latent_dim);
        w
    }

    fn decoder_widths(&self) -> Vec<usize> {
        let mut w = vec![self.latent_dim];
        w.extend(self.hidden.iter().rev());
        w.push(self.input_dim);
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Architecture descriptor stored in checkpoints; parameter blobs follow
/// this layer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureDescriptor {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub encoder: Vec<LayerSpec>,
    pub decoder: Vec<LayerSpec>,
}

fn specs(net: &Network) -> Vec<LayerSpec> {
    net.layers
        .iter()
        .map(|l| LayerSpec {
            inputs: l.inputs(),
            outputs: l.outputs(),
            activation: l.activation,
        })
        .collect()
}

/// First 8 bytes of SHA-256 over a model's descriptor, parameters and
/// standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 8]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for Fingerprint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad fingerprint {s:?}"));
        if s.len() != 16 || !s.is_ascii() {
            return Err(bad());
        }
        let mut out = [0u8; 8];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(Self(out))
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Encoder output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub means: Vec<f64>,
    pub logvars: Vec<f64>,
}

impl LatentCode {
    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

/// A trained (or initialized) VAE with its input standardization baked in.
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct VaeModel {
    encoder: Network,
    decoder: Network,
    standardization: StandardizationStats,
    fingerprint: Fingerprint,
}

impl PartialEq for VaeModel {
    fn eq(&self, other: &Self) -> bool {
        self.encoder == other.encoder
            && self.decoder == other.decoder
            && self.standardization == other.standardization
    }
}

impl VaeModel {
    pub fn new(
        encoder: Network,
        decoder: Network,
        standardization: StandardizationStats,
    ) -> Result<Self> {
        let input_dim = encoder.input_dim();
        let head = encoder.output_dim();
        if head == 0 || !head.is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                context: "encoder head (must be 2·latent_dim)",
                expected: 2 * (head / 2).max(1),
                got: head,
            });
        }
        let latent_dim = head / 2;
        if decoder.input_dim() != latent_dim {
            return Err(Error::DimensionMismatch {
                context: "decoder input",
                expected: latent_dim,
                got: decoder.input_dim(),
            });
        }
        if decoder.output_dim() != input_dim {
            return Err(Error::DimensionMismatch {
                context: "decoder output",
                expected: input_dim,
                got: decoder.output_dim(),
            });
        }
        if standardization.dim() != input_dim {
            return Err(Error::DimensionMismatch {
                context: "standardization",
                expected: input_dim,
                got: standardization.dim(),
            });
        }
        let fingerprint = compute_fingerprint(&encoder, &decoder, &standardization);
        Ok(Self {
            encoder,
            decoder,
            standardization,
            fingerprint,
        })
    }

    /// Glorot-initialized model.
    pub fn init<R: Rng + ?Sized>(
        arch: &ArchConfig,
        standardization: StandardizationStats,
        rng: &mut R,
    ) -> Result<Self> {
        let encoder = Network::glorot(
            &arch.encoder_widths(),
            arch.hidden_activation,
            Activation::Identity,
            rng,
        );
        let decoder = Network::glorot(
            &arch.decoder_widths(),
            arch.hidden_activation,
            Activation::Identity,
            rng,
        );
        Self::new(encoder, decoder, standardization)
    }

    /// Model whose every weight and bias is zero.
    pub fn zeros(arch: &ArchConfig, standardization: StandardizationStats) -> Result<Self> {
        let build = |widths: &[usize]| {
            let n = widths.len() - 1;
            Network::new(
                widths
                    .windows(2)
                    .enumerate()
                    .map(|(i, w)| {
                        let act = if i + 1 == n {
                            Activation::Identity
                        } else {
                            arch.hidden_activation
                        };
                        DenseLayer::zeros(w[0], w[1], act)
                    })
                    .collect(),
            )
        };
        Self::new(
            build(&arch.encoder_widths())?,
            build(&arch.decoder_widths())?,
            standardization,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim() / 2
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    pub fn standardization(&self) -> &StandardizationStats {
        &self.standardization
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn descriptor(&self) -> ArchitectureDescriptor {
        ArchitectureDescriptor {
            input_dim: self.input_dim(),
            latent_dim: self.latent_dim(),
            encoder: specs(&self.encoder),
            decoder: specs(&self.decoder),
        }
    }

    /// Standardizes the frame, then runs the encoder.
    pub fn encode(&self, frame: &PoseFrame) -> Result<LatentCode> {
        self.encode_values(frame.values())
    }

    pub fn encode_values(&self, values: &[f32]) -> Result<LatentCode> {
        if values.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "encode input",
                expected: self.input_dim(),
                got: values.len(),
            });
        }
        let z = self.standardization.standardize(values)?;
        self.encode_standardized(&z)
    }

    /// Encoder on an already standardized input.
    pub fn encode_standardized(&self, x: &[f64]) -> Result<LatentCode> {
        let mut head = self.encoder.infer(x)?;
        let logvars = head.split_off(self.latent_dim());
        Ok(LatentCode {
            means: head,
            logvars,
        })
    }

    /// Decoder output in standardized space.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                context: "decode input",
                expected: self.latent_dim(),
                got: z.len(),
            });
        }
        self.decoder.infer(z)
    }

    /// Decoder output mapped back to sensor space.
    pub fn decode_to_sensor(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.standardization.unstandardize(&self.decode(z)?)
    }

    /// All parameters, encoder first, in descriptor order.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    /// Same architecture and standardization with new parameters.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let n_enc = self.encoder.param_count();
        if params.len() != n_enc + self.decoder.param_count() {
            return Err(Error::DimensionMismatch {
                context: "model parameters",
                expected: n_enc + self.decoder.param_count(),
                got: params.len(),
            });
        }
        let mut encoder = self.encoder.clone();
        let mut decoder = self.decoder.clone();
        encoder.set_params(&params[..n_enc])?;
        decoder.set_params(&params[n_enc..])?;
        Self::new(encoder, decoder, self.standardization.clone())
    }
}

fn compute_fingerprint(
    encoder: &Network,
    decoder: &Network,
    standardization: &StandardizationStats,
) -> Fingerprint {
    let mut h = Sha256::new();
    let desc = ArchitectureDescriptor {
        input_dim: encoder.input_dim(),
        latent_dim: encoder.output_dim() / 2,
        encoder: specs(encoder),
        decoder: specs(decoder),
    };
    h.update(serde_json::to_vec(&desc).expect("descriptor serializes"));
    for v in encoder
        .params()
        .iter()
        .chain(&decoder.params())
        .chain(&standardization.mean)
        .chain(&standardization.std)
    {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    Fingerprint(digest[..8].try_into().unwrap())
}

/// `z = μ + exp(logvar / 2) ⊙ noise`, with logvar clamped.
pub fn reparameterize(code: &LatentCode, noise: &[f64]) -> Result<Vec<f64>> {
    if code.logvars.len() != code.means.len() || noise.len() != code.means.len() {
        return Err(Error::DimensionMismatch {
            context: "reparameterize",
            expected: code.means.len(),
            got: noise.len(),
        });
    }
    Ok(code
        .means
        .iter()
        .zip(&code.logvars)
        .zip(noise)
        .map(|((m, &lv), n)| m + (0.5 * clamp_logvar(lv)).exp() * n)
        .collect())
}

/// Closed-form `KL(N(μ, σ²) ‖ N(0, I)) = Σ ½(μ² + σ² − 1 − log σ²)`.
pub fn kl_divergence(code: &LatentCode) -> f64 {
    code.means
        .iter()
        .zip(&code.logvars)
        .map(|(m, &lv)| {
            let lv = clamp_logvar(lv);
            0.5 * (m * m + lv.exp() - 1.0 - lv)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElboLoss {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

/// Gradients of the batch ELBO with respect to encoder and decoder.
#[derive(Debug, Clone)]
pub struct ElboGradients {
    pub encoder: Gradients,
    pub decoder: Gradients,
}

impl ElboGradients {
    pub fn zeros_like(model: &VaeModel) -> Self {
        Self {
            encoder: Gradients::zeros_like(&model.encoder),
            decoder: Gradients::zeros_like(&model.decoder),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        self.encoder.add_assign(&other.encoder);
        self.decoder.add_assign(&other.decoder);
    }

    fn scale(&mut self, s: f64) {
        self.encoder.scale(s);
        self.decoder.scale(s);
    }

    /// Flattened like [`VaeModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.encoder.flatten();
        self.decoder.flatten_into(&mut out);
        out
    }
}

/// Per-example sums of reconstruction and KL terms; gradients accumulate
/// unscaled into `grads` when given.
fn example_terms(
    model: &VaeModel,
    x: &[f64],
    noise: &[f64],
    beta: f64,
    grads: Option<&mut ElboGradients>,
) -> Result<(f64, f64)> {
    let d = model.latent_dim();
    if noise.len() != d {
        return Err(Error::DimensionMismatch {
            context: "noise vector",
            expected: d,
            got: noise.len(),
        });
    }
    let (head, enc_tape) = model.encoder.forward(x)?;
    let (means, raw_logvars) = head.split_at(d);
    let logvars: Vec<f64> = raw_logvars.iter().map(|&v| clamp_logvar(v)).collect();
    let sigmas: Vec<f64> = logvars.iter().map(|lv| (0.5 * lv).exp()).collect();
    let z: Vec<f64> = (0..d).map(|j| means[j] + sigmas[j] * noise[j]).collect();
    let (recon, dec_tape) = model.decoder.forward(&z)?;

    let residual: Vec<f64> = recon.iter().zip(x).map(|(r, x)| r - x).collect();
    let rec: f64 = residual.iter().map(|r| r * r).sum();
    let kl: f64 = (0..d)
        .map(|j| 0.5 * (means[j] * means[j] + logvars[j].exp() - 1.0 - logvars[j]))
        .sum();

    if let Some(grads) = grads {
        let d_recon: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
        let dz = model
            .decoder
            .backward_accumulate(&dec_tape, &d_recon, &mut grads.decoder)?;
        let mut d_head = vec![0.0; 2 * d];
        for j in 0..d {
            d_head[j] = dz[j] + beta * means[j];
            if (-LOGVAR_CLAMP..=LOGVAR_CLAMP).contains(&raw_logvars[j]) {
                d_head[d + j] =
                    dz[j] * 0.5 * sigmas[j] * noise[j] + beta * 0.5 * (logvars[j].exp() - 1.0);
            }
        }
        model
            .encoder
            .backward_accumulate(&enc_tape, &d_head, &mut grads.encoder)?;
    }
    Ok((rec, kl))
}

fn check_batch(batch: &[Vec<f64>], noise: &[Vec<f64>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if noise.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            context: "noise batch",
            expected: batch.len(),
            got: noise.len(),
        });
    }
    Ok(())
}

fn finish(rec: f64, kl: f64, n: usize, beta: f64) -> Result<ElboLoss> {
    let n = n as f64;
    let loss = ElboLoss {
        reconstruction: rec / n,
        kl: kl / n,
        total: (rec + beta * kl) / n,
    };
    if !(loss.total.is_finite() && loss.reconstruction.is_finite() && loss.kl.is_finite()) {
        return Err(Error::NonFinite("ELBO loss"));
    }
    Ok(loss)
}

/// Batch ELBO on standardized inputs with one frozen noise vector per
/// example. Reconstruction is the per-frame sum of squared errors, averaged
/// over the batch; `total = reconstruction + beta · kl`.
pub fn elbo_loss(
    model: &VaeModel,
    batch: &[Vec<f64>],
    beta: f64,
    noise: &[Vec<f64>],
) -> Result<ElboLoss> {
    check_batch(batch, noise)?;
    let (mut rec, mut kl) = (0.0, 0.0);
    for (x, e) in batch.iter().zip(noise) {
        let (r, k) = example_terms(model, x, e, beta, None)?;
        rec += r;
        kl += k;
    }
    finish(rec, kl, batch.len(), beta)
}

/// [`elbo_loss`] plus exact gradients of `total`.
pub fn elbo_loss_and_gradients(
    model: &VaeModel,
    batch: &[Vec<f64>],
    beta: f64,
    noise: &[Vec<f64>],
) -> Result<(ElboLoss, ElboGradients)> {
    check_batch(batch, noise)?;
    let mut grads = ElboGradients::zeros_like(model);
    let (mut rec, mut kl) = (0.0, 0.0);
    for (x, e) in batch.iter().zip(noise) {
        let (r, k) = example_terms(model, x, e, beta, Some(&mut grads))?;
        rec += r;
        kl += k;
    }
    let loss = finish(rec, kl, batch.len(), beta)?;
    grads.scale(1.0 / batch.len() as f64);
    Ok((loss, grads))
}

/// Standard-normal noise vectors, one per example.
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_arch() -> ArchConfig {
        ArchConfig {
            input_dim: 75,
            latent_dim: 4,
            hidden: vec![8],
            hidden_activation: Activation::Relu,
        }
    }

    #[test]
    fn zero_weight_encoder_outputs_zero_code() {
        let m =
            VaeModel::zeros(&ArchConfig::default(), StandardizationStats::identity(75)).unwrap();
        let frame = PoseFrame::new((0..75).map(|i| i as f32 * 0.1).collect(), 0.0).unwrap();
        let code = m.encode(&frame).unwrap();
        assert_eq!(code.means, vec![0.0; 16]);
        assert_eq!(code.logvars, vec![0.0; 16]);
        assert_eq!(code.dim(), 16);
    }

    #[test]
    fn linear_encoder_and_decoder_match_hand_computation() {
        // input dim 2, latent 1: head = W x + b with W = [[1, 2], [0.5, -1]], b = [0.1, 0.2]
        let enc = Network::new(vec![DenseLayer::new(
            2,
            2,
            vec![1.0, 2.0, 0.5, -1.0],
            vec![0.1, 0.2],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let dec = Network::new(vec![DenseLayer::new(
            1,
            2,
            vec![3.0, -2.0],
            vec![1.0, 0.0],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let stats = StandardizationStats::new(vec![1.0, 0.0], vec![2.0, 0.5]).unwrap();
        let m = VaeModel::new(enc, dec, stats).unwrap();
        // standardized x = [(3-1)/2, (1-0)/0.5] = [1, 2]
        let code = m.encode_values(&[3.0, 1.0]).unwrap();
        assert_relative_eq!(code.means[0], 1.0 + 4.0 + 0.1);
        assert_relative_eq!(code.logvars[0], 0.5 - 2.0 + 0.2);
        assert_eq!(m.decode(&[2.0]).unwrap(), vec![7.0, -4.0]);
        // sensor space: [7·2 + 1, -4·0.5 + 0]
        assert_eq!(m.decode_to_sensor(&[2.0]).unwrap(), vec![15.0, -2.0]);
    }

    #[test]
    fn zero_weight_decoder_returns_bias() {
        let m =
            VaeModel::zeros(&ArchConfig::default(), StandardizationStats::identity(75)).unwrap();
        let out = m.decode(&[0.3; 16]).unwrap();
        assert_eq!(out.len(), 75);
        assert!(out.iter().all(|&v| v == 0.0));
        assert!(m.decode(&[0.0; 15]).is_err());
    }

    #[test]
    fn encoder_head_must_be_even() {
        let enc = Network::new(vec![DenseLayer::zeros(3, 3, Activation::Identity)]).unwrap();
        let dec = Network::new(vec![DenseLayer::zeros(1, 3, Activation::Identity)]).unwrap();
        assert!(VaeModel::new(enc, dec, StandardizationStats::identity(3)).is_err());
    }

    #[test]
    fn reparameterize_cases() {
        let code = LatentCode {
            means: vec![1.0, -1.0],
            logvars: vec![0.3, -0.2],
        };
        assert_eq!(reparameterize(&code, &[0.0, 0.0]).unwrap(), code.means);
        let unit = LatentCode {
            means: vec![0.0; 3],
            logvars: vec![0.0; 3],
        };
        assert_eq!(
            reparameterize(&unit, &[0.5, -1.5, 2.0]).unwrap(),
            vec![0.5, -1.5, 2.0]
        );
        let sigma_two = LatentCode {
            means: vec![1.0],
            logvars: vec![4.0f64.ln()],
        };
        assert_relative_eq!(reparameterize(&sigma_two, &[0.5]).unwrap()[0], 2.0);
        assert!(reparameterize(&code, &[0.0]).is_err());
    }

    #[test]
    fn logvar_is_clamped_before_exponentiation() {
        let code = LatentCode {
            means: vec![0.0],
            logvars: vec![1000.0],
        };
        let z = reparameterize(&code, &[1.0]).unwrap();
        assert_relative_eq!(z[0], 5.0f64.exp());
        assert!(kl_divergence(&code).is_finite());
    }

    #[test]
    fn kl_closed_form_cases() {
        let prior = LatentCode {
            means: vec![0.0; 16],
            logvars: vec![0.0; 16],
        };
        assert_eq!(kl_divergence(&prior), 0.0);
        let shifted = LatentCode {
            means: vec![1.0],
            logvars: vec![0.0],
        };
        assert_eq!(kl_divergence(&shifted), 0.5);
    }

    proptest::proptest! {
        #[test]
        fn kl_is_non_negative(
            means in proptest::collection::vec(-5.0f64..5.0, 1..8),
            lv in proptest::collection::vec(-12.0f64..12.0, 8),
        ) {
            let code = LatentCode { logvars: lv[..means.len()].to_vec(), means };
            proptest::prop_assert!(kl_divergence(&code) >= 0.0);
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        let m = VaeModel::zeros(&tiny_arch(), StandardizationStats::identity(75)).unwrap();
        assert!(matches!(
            elbo_loss(&m, &[], 1.0, &[]),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn elbo_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model =
            VaeModel::init(&tiny_arch(), StandardizationStats::identity(75), &mut rng).unwrap();
        let batch: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..75).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let noise = draw_noise(&mut rng, 10, 4);
        let params = model.params();
        let err = gradient_check(
            |p: &[f64]| {
                let m = model.with_params(p).unwrap();
                let (loss, g) = elbo_loss_and_gradients(&m, &batch, 1.0, &noise).unwrap();
                (loss.total, g.flatten())
            },
            &params,
            200,
            1e-5,
        );
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = VaeModel::init(&tiny_arch(), StandardizationStats::identity(75), &mut rng).unwrap();
        let mut p = a.params();
        p[0] += 1e-12;
        let b = a.with_params(&p).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        let text = a.fingerprint().to_string();
        assert_eq!(text.len(), 16);
        assert_eq!(text.parse::<Fingerprint>().unwrap(), a.fingerprint());
        assert!("xyz".parse::<Fingerprint>().is_err());
    }
}
