//! Masked-reconstruction novelty model.
//!
//! The model only ever sees loss on masked (traversed) pixels, so its
//! reconstruction error stays low on terrain that looks like what the
//! vehicle drove over and grows elsewhere.

mod checkpoint;
mod loss;
mod optim;
mod patch_linear;
mod small_conv;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{masked_loss, masked_loss_gradient, masked_loss_gradient_with, masked_loss_with, Normalization};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{train, train_with_observer, EpochMetrics, TrainingSummary};

use crate::image::{BinaryMask, ImageError, ImageTensor};
use patch_linear::PatchLinear;
use small_conv::SmallConv;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("every training mask is empty")]
    AllMasksEmpty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ImageError> for ModelError {
    fn from(e: ImageError) -> Self {
        ModelError::DimensionMismatch(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    PatchLinear,
    SmallConv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub bottleneck: usize,
    /// PatchLinear only.
    pub patch_size: usize,
    /// SmallConv only: channels of the three encoder stages.
    pub conv_channels: [usize; 3],
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { architecture: Architecture::PatchLinear, bottleneck: 256, patch_size: 16, conv_channels: [8, 16, 16], seed: 0 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.bottleneck == 0 {
            return Err(ModelError::InvalidConfig("bottleneck must be at least 1".into()));
        }
        if self.patch_size == 0 {
            return Err(ModelError::InvalidConfig("patch_size must be at least 1".into()));
        }
        if self.conv_channels.contains(&0) {
            return Err(ModelError::InvalidConfig("conv_channels must be positive".into()));
        }
        Ok(())
    }

    /// Checks that an input of this size is usable by the architecture.
    pub fn validate_input(&self, width: usize, height: usize) -> Result<(), ModelError> {
        match self.architecture {
            Architecture::PatchLinear if !width.is_multiple_of(self.patch_size) || !height.is_multiple_of(self.patch_size) => {
                Err(ModelError::InvalidConfig(format!(
                    "input {width}x{height} is not a multiple of patch_size {}",
                    self.patch_size
                )))
            }
            Architecture::SmallConv if !width.is_multiple_of(8) || !height.is_multiple_of(8) => {
                Err(ModelError::InvalidConfig(format!("input {width}x{height} must be a multiple of 8 for small_conv")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub input_width: usize,
    pub input_height: usize,
    /// Fraction of samples used for training; the rest validate.
    pub split: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub normalization: Normalization,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 4,
            epochs: 100,
            input_width: 224,
            input_height: 224,
            split: 0.8,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            normalization: Normalization::ImageArea,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive");
        }
        if self.input_width == 0 || self.input_height == 0 {
            return bad("input size must be positive");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad("split must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Network {
    PatchLinear(PatchLinear),
    SmallConv(SmallConv),
}

impl Network {
    fn new(config: &ModelConfig, width: usize, height: usize, channels: usize) -> Result<Self, ModelError> {
        config.validate()?;
        config.validate_input(width, height)?;
        if !(channels == 1 || channels == 3) {
            return Err(ModelError::InvalidConfig(format!("unsupported channel count {channels}")));
        }
        Ok(match config.architecture {
            Architecture::PatchLinear => Network::PatchLinear(PatchLinear {
                width,
                height,
                channels,
                patch: config.patch_size,
                bottleneck: config.bottleneck,
            }),
            Architecture::SmallConv => Network::SmallConv(SmallConv {
                width,
                height,
                channels,
                hidden: config.conv_channels,
                bottleneck: config.bottleneck,
            }),
        })
    }

    fn param_count(&self) -> usize {
        match self {
            Network::PatchLinear(n) => n.param_count(),
            Network::SmallConv(n) => n.param_count(),
        }
    }

    fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Network::PatchLinear(n) => n.init(&mut rng),
            Network::SmallConv(n) => n.init(&mut rng),
        }
    }

    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            Network::PatchLinear(n) => n.forward(params, x),
            Network::SmallConv(n) => n.forward(params, x),
        }
    }

    fn loss_and_gradient(&self, params: &[f64], x: &[f64], m: &BinaryMask, norm: Normalization) -> (f64, Vec<f64>) {
        match self {
            Network::PatchLinear(n) => n.loss_and_gradient(params, x, m, norm),
            Network::SmallConv(n) => n.loss_and_gradient(params, x, m, norm),
        }
    }
}

/// A trained (or freshly initialized) reconstruction model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionModel {
    config: ModelConfig,
    train_config: TrainConfig,
    width: usize,
    height: usize,
    channels: usize,
    network: Network,
    params: Vec<f64>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

impl ReconstructionModel {
    /// Seeded initialization: every parameter uniform in `±1/sqrt(fan_in)`.
    pub fn new(config: &ModelConfig, train_config: &TrainConfig, channels: usize) -> Result<Self, ModelError> {
        let (width, height) = (train_config.input_width, train_config.input_height);
        let network = Network::new(config, width, height, channels)?;
        let params = network.init(config.seed);
        Ok(Self {
            config: config.clone(),
            train_config: train_config.clone(),
            width,
            height,
            channels,
            network,
            params,
            best_val_loss: f64::NAN,
            best_epoch: 0,
            epochs_run: 0,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        train_config: TrainConfig,
        channels: usize,
        params: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let mut model = Self::new(&config, &train_config, channels)?;
        if params.len() != model.params.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} parameters, found {}",
                model.params.len(),
                params.len()
            )));
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn input_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.network.param_count()
    }

    fn check_input(&self, x: &ImageTensor) -> Result<(), ModelError> {
        if x.channels() != self.channels {
            return Err(ModelError::DimensionMismatch(format!(
                "model expects {} channels, image has {}",
                self.channels,
                x.channels()
            )));
        }
        Ok(())
    }

    /// Unclamped decoder output at the model's input size.
    pub fn forward_raw(&self, x: &ImageTensor) -> Result<Vec<f64>, ModelError> {
        self.check_input(x)?;
        let x = self.fit(x);
        Ok(self.network.forward(&self.params, x.data()))
    }

    fn fit(&self, x: &ImageTensor) -> ImageTensor {
        if (x.width(), x.height()) == (self.width, self.height) {
            x.clone()
        } else {
            x.resize(self.width, self.height)
        }
    }

    /// Reconstruction with the same dimensions as `x`, clamped to `[0, 1]`.
    /// Inputs of another size are resized to the model input and back.
    pub fn reconstruct(&self, x: &ImageTensor) -> Result<ImageTensor, ModelError> {
        let raw = self.forward_raw(x)?;
        let out = ImageTensor::from_clamped(self.width, self.height, self.channels, raw)?;
        if (x.width(), x.height()) == (self.width, self.height) {
            Ok(out)
        } else {
            Ok(out.resize(x.width(), x.height()))
        }
    }

    /// Masked loss of the raw reconstruction and its gradient with respect
    /// to every parameter. `x` and `m` must already be at the input size.
    pub fn loss_and_gradient(&self, x: &ImageTensor, m: &BinaryMask) -> Result<(f64, Vec<f64>), ModelError> {
        self.loss_and_gradient_at(&self.params, x, m)
    }

    pub fn loss_and_gradient_at(&self, params: &[f64], x: &ImageTensor, m: &BinaryMask) -> Result<(f64, Vec<f64>), ModelError> {
        self.check_input(x)?;
        if (x.width(), x.height()) != (self.width, self.height) || m.dims() != (self.width, self.height) {
            return Err(ModelError::DimensionMismatch(format!(
                "expected {}x{} input and mask, got {}x{} and {}x{}",
                self.width,
                self.height,
                x.width(),
                x.height(),
                m.width(),
                m.height()
            )));
        }
        Ok(self.network.loss_and_gradient(params, x.data(), m, self.train_config.normalization))
    }

    /// Masked loss of the raw reconstruction (no gradient).
    pub fn loss(&self, x: &ImageTensor, m: &BinaryMask) -> Result<f64, ModelError> {
        let raw = self.forward_raw(x)?;
        if m.dims() != (self.width, self.height) {
            return Err(ModelError::DimensionMismatch("mask does not match model input".into()));
        }
        Ok(loss::masked_loss_raw(&self.fit(x).into_data(), &raw, m, self.channels, self.train_config.normalization))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> ImageTensor {
        ImageTensor::new(w, h, c, (0..w * h * c).map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_vec(w, h, (0..w * h).map(|_| rng.random_bool(0.5)).collect()).unwrap()
    }

    fn small(arch: Architecture, w: usize, h: usize) -> (ModelConfig, TrainConfig) {
        let mc = ModelConfig { architecture: arch, bottleneck: 3, patch_size: 4, conv_channels: [2, 3, 2], seed: 9 };
        let tc = TrainConfig { input_width: w, input_height: h, ..TrainConfig::default() };
        (mc, tc)
    }

    /// Central differences on a random subset of parameters.
    fn gradient_check(arch: Architecture, channels: usize, norm: Normalization) {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (mc, mut tc) = small(arch, 16, 8);
        tc.normalization = norm;
        let model = ReconstructionModel::new(&mc, &tc, channels).unwrap();
        let x = random_image(&mut rng, 16, 8, channels);
        let m = random_mask(&mut rng, 16, 8);
        let (_, grad) = model.loss_and_gradient(&x, &m).unwrap();
        let h = 1e-5;
        let mut checked = 0;
        for _ in 0..60 {
            let i = rng.random_range(0..model.param_count());
            let mut p = model.params().to_vec();
            p[i] += h;
            let (plus, _) = model.loss_and_gradient_at(&p, &x, &m).unwrap();
            p[i] -= 2.0 * h;
            let (minus, _) = model.loss_and_gradient_at(&p, &x, &m).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            let scale = fd.abs().max(grad[i].abs());
            if scale < 1e-10 {
                continue;
            }
            let rel = (fd - grad[i]).abs() / scale;
            assert!(rel < 1e-4, "{arch:?} param {i}: analytic {} vs numeric {fd} (rel {rel})", grad[i]);
            checked += 1;
        }
        assert!(checked > 20, "too few informative parameters checked: {checked}");
    }

    #[test]
    fn patch_linear_gradient_check() {
        gradient_check(Architecture::PatchLinear, 3, Normalization::ImageArea);
        gradient_check(Architecture::PatchLinear, 1, Normalization::MaskArea);
    }

    #[test]
    fn small_conv_gradient_check() {
        gradient_check(Architecture::SmallConv, 3, Normalization::ImageArea);
        gradient_check(Architecture::SmallConv, 1, Normalization::MaskArea);
    }

    #[test]
    fn reconstruct_shape_and_finiteness() {
        let (mc, tc) = small(Architecture::PatchLinear, 16, 8);
        let model = ReconstructionModel::new(&mc, &tc, 3).unwrap();
        let x = ImageTensor::filled(16, 8, 3, 0.0).unwrap();
        let r = model.reconstruct(&x).unwrap();
        assert_eq!(r.shape(), x.shape());
        assert!(r.data().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        // other sizes come back at their own size
        let y = ImageTensor::filled(10, 7, 3, 0.3).unwrap();
        assert_eq!(model.reconstruct(&y).unwrap().shape(), (10, 7, 3));
        assert!(model.reconstruct(&ImageTensor::filled(16, 8, 1, 0.3).unwrap()).is_err());
    }

    #[test]
    fn default_sized_models_reconstruct_224() {
        let tc = TrainConfig::default();
        for arch in [Architecture::PatchLinear, Architecture::SmallConv] {
            let mc = ModelConfig { architecture: arch, bottleneck: 16, ..ModelConfig::default() };
            let model = ReconstructionModel::new(&mc, &tc, 3).unwrap();
            let x = ImageTensor::filled(224, 224, 3, 0.0).unwrap();
            let r = model.reconstruct(&x).unwrap();
            assert_eq!(r.shape(), (224, 224, 3));
            assert!(r.data().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn loss_matches_reconstruction_loss_on_unclamped_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mc, tc) = small(Architecture::PatchLinear, 16, 8);
        let model = ReconstructionModel::new(&mc, &tc, 3).unwrap();
        let x = random_image(&mut rng, 16, 8, 3);
        let m = random_mask(&mut rng, 16, 8);
        let (l, _) = model.loss_and_gradient(&x, &m).unwrap();
        assert!((model.loss(&x, &m).unwrap() - l).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        let tc = TrainConfig { input_width: 30, input_height: 30, ..TrainConfig::default() };
        let mc = ModelConfig { patch_size: 16, ..ModelConfig::default() };
        assert!(ReconstructionModel::new(&mc, &tc, 3).is_err());
        let mc = ModelConfig { architecture: Architecture::SmallConv, ..ModelConfig::default() };
        assert!(ReconstructionModel::new(&mc, &tc, 3).is_err());
        let mc = ModelConfig { bottleneck: 0, ..ModelConfig::default() };
        assert!(mc.validate().is_err());
        assert!(TrainConfig { split: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
    }
}
