//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! "HRN1"  u32 version
//! u32 len, config text (`key = value` lines)
//! u64 completed iterations
//! table: u32 count, then per tensor
//!        u16 name len, name, u8 dtype, u8 ndim (4), 4 x u32 dims, data
//! u8 optimizer flag; if 1: u64 step, f64 beta1, beta2, eps, table m, table v
//! u32 CRC-32 of everything above
//! ```

use std::path::Path;

use crate::config::{self, KeyValue};
use crate::data::DegradationSpec;
use crate::error::{CheckpointError, Error, Result};
use crate::model::{Hran, HranModel, ModelConfig};
use crate::nn::ParamStore;
use crate::tensor::{DType, Scalar, Shape, Tensor4};

use super::{Adam, TrainConfig};

pub const MAGIC: &[u8; 4] = b"HRN1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub degradation: DegradationSpec,
    pub iteration: u64,
    pub params: ParamStore<f32>,
    pub optim: Option<Adam<f32>>,
}

impl Checkpoint {
    /// A bare model with default training settings.
    pub fn from_model(model: &HranModel) -> Self {
        Checkpoint {
            model: model.config().clone(),
            train: TrainConfig::default(),
            degradation: DegradationSpec::bi(model.config().scale),
            iteration: 0,
            params: model.params.clone(),
            optim: None,
        }
    }

    pub fn to_model(&self) -> Result<HranModel> {
        HranModel::from_params(&self.model, self.params.clone())
    }

    pub fn config_text(&self) -> String {
        let mut entries = self.model.entries();
        entries.extend(self.train.entries());
        entries.extend(self.degradation.entries());
        config::render(entries)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        let text = self.config_text();
        b.extend_from_slice(&(text.len() as u32).to_le_bytes());
        b.extend_from_slice(text.as_bytes());
        b.extend_from_slice(&self.iteration.to_le_bytes());
        write_table(&mut b, &self.params);
        match &self.optim {
            None => b.push(0),
            Some(o) => {
                b.push(1);
                b.extend_from_slice(&o.step.to_le_bytes());
                for h in [o.beta1, o.beta2, o.eps] {
                    b.extend_from_slice(&h.to_le_bytes());
                }
                write_table(&mut b, &o.m);
                write_table(&mut b, &o.v);
            }
        }
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic.into());
        }
        if bytes.len() < 12 {
            return Err(checksum_error(bytes));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CheckpointError::Checksum { stored, computed }.into());
        }

        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: VERSION,
            }
            .into());
        }
        let len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(len)?)
            .map_err(|_| CheckpointError::Malformed("config text is not UTF-8".into()))?;
        let mut model = ModelConfig::default();
        let mut train = TrainConfig::default();
        let mut degradation = DegradationSpec::bi(model.scale);
        config::apply(&config::parse(text)?, &mut [&mut model, &mut train, &mut degradation])
            .map_err(|e| CheckpointError::Malformed(format!("embedded config: {e}")))?;
        degradation.scale = model.scale;
        let iteration = r.u64()?;

        let arch = Hran::new(&model).map_err(|e| CheckpointError::Malformed(format!("embedded config: {e}")))?;
        let expected: Vec<(String, Shape)> = arch.param_specs().into_iter().map(|s| (s.name, s.shape)).collect();
        let params = r.table(&expected)?;
        let optim = match r.u8()? {
            0 => None,
            1 => {
                let step = r.u64()?;
                let beta1 = r.f64()?;
                let beta2 = r.f64()?;
                let eps = r.f64()?;
                let m = r.table(&expected)?;
                let v = r.table(&expected)?;
                Some(Adam {
                    beta1,
                    beta2,
                    eps,
                    step,
                    m,
                    v,
                })
            }
            f => return Err(CheckpointError::Malformed(format!("optimizer flag {f}")).into()),
        };
        if r.pos != body.len() {
            return Err(CheckpointError::Malformed(format!("{} trailing bytes", body.len() - r.pos)).into());
        }
        Ok(Checkpoint {
            model,
            train,
            degradation,
            iteration,
            params,
            optim,
        })
    }

    /// Writes through a temporary file so a crash never leaves a partial
    /// checkpoint under the final name.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn checksum_error(bytes: &[u8]) -> Error {
    CheckpointError::Checksum {
        stored: 0,
        computed: crc32fast::hash(bytes),
    }
    .into()
}

fn write_table<T: Scalar>(b: &mut Vec<u8>, store: &ParamStore<T>) {
    b.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (name, t) in store.iter() {
        b.extend_from_slice(&(name.len() as u16).to_le_bytes());
        b.extend_from_slice(name.as_bytes());
        b.push(T::DTYPE.code());
        b.push(4);
        for d in t.shape().dims() {
            b.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.data() {
            match T::DTYPE {
                DType::F32 => b.extend_from_slice(&(v.as_f64() as f32).to_le_bytes()),
                DType::F64 => b.extend_from_slice(&v.as_f64().to_le_bytes()),
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Malformed(format!("unexpected end of data at byte {}", self.pos)).into());
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Reads a tensor table and checks it against `expected` names and
    /// shapes. Stored order is preserved; f64 data is narrowed.
    fn table(&mut self, expected: &[(String, Shape)]) -> Result<ParamStore<f32>> {
        let count = self.u32()? as usize;
        let mut store = ParamStore::default();
        for _ in 0..count {
            let n = self.u16()? as usize;
            let name = std::str::from_utf8(self.take(n)?)
                .map_err(|_| CheckpointError::Malformed("tensor name is not UTF-8".into()))?
                .to_string();
            let dtype = DType::from_code(self.u8()?)
                .ok_or_else(|| CheckpointError::Malformed(format!("tensor `{name}` has an unknown dtype")))?;
            let ndim = self.u8()?;
            if ndim != 4 {
                return Err(CheckpointError::Malformed(format!("tensor `{name}` has {ndim} dims")).into());
            }
            let mut dims = [0usize; 4];
            for d in &mut dims {
                *d = self.u32()? as usize;
            }
            let shape = Shape::new(dims[0], dims[1], dims[2], dims[3]);
            let want = expected
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| CheckpointError::UnknownTensor(name.clone()))?
                .1;
            if shape != want {
                return Err(CheckpointError::TensorShape {
                    name,
                    found: shape,
                    expected: want,
                }
                .into());
            }
            let raw = self.take(shape.numel() * dtype.size())?;
            let data: Vec<f32> = match dtype {
                DType::F32 => raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
                DType::F64 => raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")) as f32)
                    .collect(),
            };
            store
                .insert(name.clone(), Tensor4::from_vec(shape, data)?)
                .map_err(|_| CheckpointError::Malformed(format!("tensor `{name}` stored twice")))?;
        }
        if let Some((missing, _)) = expected.iter().find(|(n, _)| !store.contains(n)) {
            return Err(CheckpointError::MissingTensor(missing.clone()).into());
        }
        Ok(store)
    }
}
