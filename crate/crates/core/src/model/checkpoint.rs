//! Binary checkpoint container. All integers and floats little-endian:
//!
//! ```text
//! magic            8 bytes  "TRLMCKPT"
//! version          u32      1
//! architecture     u8       0 = patch_linear, 1 = small_conv
//! channels         u32
//! input_width      u32
//! input_height     u32
//! bottleneck       u32
//! patch_size       u32
//! conv_channels    3 × u32
//! model_seed       u64
//! learning_rate    f64
//! batch_size       u32
//! epochs           u32
//! split            f64
//! train_seed       u64
//! optimizer        u8       0 = sgd, 1 = adam
//! normalization    u8       0 = image area, 1 = mask area
//! best_val_loss    f64
//! best_epoch       u32
//! epochs_run       u32
//! param_count      u64
//! params           param_count × f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Architecture, ModelConfig, ModelError, Normalization, OptimizerKind, ReconstructionModel, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TRLMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &ReconstructionModel, mut w: W) -> Result<(), ModelError> {
    let mc = model.config();
    let tc = model.train_config();
    let (width, height) = model.input_size();
    let u32_of = |v: usize| u32::try_from(v).map_err(|_| ModelError::Checkpoint(format!("{v} does not fit in u32")));

    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&[match mc.architecture {
        Architecture::PatchLinear => 0,
        Architecture::SmallConv => 1,
    }])?;
    for v in [model.channels(), width, height, mc.bottleneck, mc.patch_size] {
        w.write_all(&u32_of(v)?.to_le_bytes())?;
    }
    for v in mc.conv_channels {
        w.write_all(&u32_of(v)?.to_le_bytes())?;
    }
    w.write_all(&mc.seed.to_le_bytes())?;
    w.write_all(&tc.learning_rate.to_le_bytes())?;
    w.write_all(&u32_of(tc.batch_size)?.to_le_bytes())?;
    w.write_all(&u32_of(tc.epochs)?.to_le_bytes())?;
    w.write_all(&tc.split.to_le_bytes())?;
    w.write_all(&tc.seed.to_le_bytes())?;
    w.write_all(&[tc.optimizer.code()])?;
    w.write_all(&[match tc.normalization {
        Normalization::ImageArea => 0,
        Normalization::MaskArea => 1,
    }])?;
    w.write_all(&model.best_val_loss.to_le_bytes())?;
    w.write_all(&u32_of(model.best_epoch)?.to_le_bytes())?;
    w.write_all(&u32_of(model.epochs_run)?.to_le_bytes())?;
    w.write_all(&(model.params().len() as u64).to_le_bytes())?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], ModelError> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| ModelError::Checkpoint(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelError> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(self.bytes(what)?) as usize)
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<ReconstructionModel, ModelError> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>("magic")? != CHECKPOINT_MAGIC {
        return Err(ModelError::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.bytes("version")?);
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let architecture = match r.u8("architecture")? {
        0 => Architecture::PatchLinear,
        1 => Architecture::SmallConv,
        other => return Err(ModelError::Checkpoint(format!("unknown architecture {other}"))),
    };
    let channels = r.u32("channels")?;
    let input_width = r.u32("input_width")?;
    let input_height = r.u32("input_height")?;
    let bottleneck = r.u32("bottleneck")?;
    let patch_size = r.u32("patch_size")?;
    let conv_channels = [r.u32("conv_channels")?, r.u32("conv_channels")?, r.u32("conv_channels")?];
    let model_seed = r.u64("model_seed")?;
    let learning_rate = r.f64("learning_rate")?;
    let batch_size = r.u32("batch_size")?;
    let epochs = r.u32("epochs")?;
    let split = r.f64("split")?;
    let train_seed = r.u64("train_seed")?;
    let optimizer = OptimizerKind::from_code(r.u8("optimizer")?)
        .ok_or_else(|| ModelError::Checkpoint("unknown optimizer".into()))?;
    let normalization = match r.u8("normalization")? {
        0 => Normalization::ImageArea,
        1 => Normalization::MaskArea,
        other => return Err(ModelError::Checkpoint(format!("unknown normalization {other}"))),
    };
    let best_val_loss = r.f64("best_val_loss")?;
    let best_epoch = r.u32("best_epoch")?;
    let epochs_run = r.u32("epochs_run")?;
    let count = r.u64("param_count")? as usize;

    let mc = ModelConfig { architecture, bottleneck, patch_size, conv_channels, seed: model_seed };
    let tc = TrainConfig {
        learning_rate,
        batch_size,
        epochs,
        input_width,
        input_height,
        split,
        seed: train_seed,
        optimizer,
        normalization,
    };
    // validate the shape before trusting `count` for an allocation
    let mut model = ReconstructionModel::new(&mc, &tc, channels)?;
    if count != model.param_count() {
        return Err(ModelError::Checkpoint(format!("expected {} parameters, header says {count}", model.param_count())));
    }
    let mut raw = vec![0u8; count * 8];
    r.inner
        .read_exact(&mut raw)
        .map_err(|_| ModelError::Checkpoint("truncated parameter array".into()))?;
    let params: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(ModelError::Checkpoint("trailing bytes after parameters".into()));
    }
    model = ReconstructionModel::from_parts(mc, tc, channels, params)?;
    model.best_val_loss = best_val_loss;
    model.best_epoch = best_epoch;
    model.epochs_run = epochs_run;
    Ok(model)
}

pub fn save_checkpoint(model: &ReconstructionModel, path: &Path) -> Result<(), ModelError> {
    write_checkpoint(model, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<ReconstructionModel, ModelError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
