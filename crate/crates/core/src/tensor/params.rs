//! Named trainable arrays, gradient slots and the binary checkpoint format.
//!
//! Checkpoint byte layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes   "MUFPARAM"
//! version u32       1
//! dtype   u8        1 = f32, 2 = f64
//! count   u32       number of entries
//! entry*  kind u8 (0 trainable, 1 buffer)
//!         name_len u32, name bytes (UTF-8)
//!         shape 3 x u64
//!         values, product(shape) elements of dtype
//! ```

use crate::error::{Error, Result};
use crate::tensor::array::Tensor;
use crate::tensor::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

/// Standard deviation of the truncated-normal weight initializer.
pub const INIT_STD: f64 = 0.02;

const MAGIC: &[u8; 8] = b"MUFPARAM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// Normal with std [`INIT_STD`], redrawn beyond two standard deviations.
    TruncatedNormal,
    /// Normal with the given std, unbounded. Used for embedding tables.
    Normal(f64),
    Zeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: [usize; 3],
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: [usize; 3], init: Init) -> Self {
        ParamSpec { name: name.into(), shape, init }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParameterStore<T> {
    names: Vec<String>,
    values: Vec<Tensor<T>>,
    grads: Vec<Vec<T>>,
    index: HashMap<String, usize>,
    buffers: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> ParameterStore<T> {
    pub fn new() -> Self {
        ParameterStore {
            names: Vec::new(),
            values: Vec::new(),
            grads: Vec::new(),
            index: HashMap::new(),
            buffers: BTreeMap::new(),
        }
    }

    /// Instantiates every spec in order from one seeded stream.
    pub fn init(specs: &[ParamSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Self::new();
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        for spec in specs {
            let data: Vec<T> = (0..spec.len())
                .map(|_| match spec.init {
                    Init::TruncatedNormal => loop {
                        let z: f64 = std_normal.sample(&mut rng);
                        if z.abs() <= 2.0 {
                            break T::lit(z * INIT_STD);
                        }
                    },
                    Init::Normal(std) => T::lit(std_normal.sample(&mut rng) * std),
                    Init::Zeros => T::zero(),
                    Init::Ones => T::one(),
                })
                .collect();
            store.add(&spec.name, Tensor::new(spec.shape, data)?)?;
        }
        Ok(store)
    }

    pub fn add(&mut self, name: &str, value: Tensor<T>) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::contract(format!("parameter {name:?} already exists")));
        }
        let id = self.values.len();
        self.grads.push(vec![T::zero(); value.len()]);
        self.values.push(value);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn scalar_count(&self) -> u64 {
        self.values.iter().map(|v| v.len() as u64).sum()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.id(name).ok_or_else(|| Error::contract(format!("missing parameter {name:?}")))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, id: usize) -> &Tensor<T> {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: usize) -> &mut Tensor<T> {
        &mut self.values[id]
    }

    pub fn grad(&self, id: usize) -> &[T] {
        &self.grads[id]
    }

    /// Mutable access to a value together with its gradient.
    pub fn value_and_grad(&mut self, id: usize) -> (&mut Tensor<T>, &[T]) {
        (&mut self.values[id], &self.grads[id])
    }

    pub fn accumulate_grad(&mut self, id: usize, g: &[T]) {
        for (a, &b) in self.grads[id].iter_mut().zip(g) {
            *a = *a + b;
        }
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// Non-trainable state such as running normalization statistics.
    pub fn buffer(&self, name: &str) -> Option<&[T]> {
        self.buffers.get(name).map(Vec::as_slice)
    }

    pub fn set_buffer(&mut self, name: &str, values: Vec<T>) {
        self.buffers.insert(name.to_string(), values);
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(Tensor::is_finite)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(T::DTYPE);
        out.extend_from_slice(&((self.values.len() + self.buffers.len()) as u32).to_le_bytes());
        let mut entry = |kind: u8, name: &str, shape: [usize; 3], data: &[T]| {
            out.push(kind);
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            for s in shape {
                out.extend_from_slice(&(s as u64).to_le_bytes());
            }
            for &x in data {
                x.write_le(&mut out);
            }
        };
        for (name, v) in self.names.iter().zip(&self.values) {
            entry(0, name, v.shape(), v.data());
        }
        for (name, v) in &self.buffers {
            entry(1, name, [1, 1, v.len()], v);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a parameter checkpoint".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let dtype = r.take(1)?[0];
        if dtype != T::DTYPE {
            return Err(Error::Format(format!("checkpoint dtype {dtype} does not match {}", T::DTYPE)));
        }
        let count = r.u32()?;
        let mut store = Self::new();
        for _ in 0..count {
            let kind = r.take(1)?[0];
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?
                .to_string();
            let shape = [r.u64()? as usize, r.u64()? as usize, r.u64()? as usize];
            let n = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s));
            let n = n.ok_or_else(|| Error::Format("shape overflows".into()))?;
            let raw = r.take(n.checked_mul(T::BYTES).ok_or_else(|| Error::Format("shape overflows".into()))?)?;
            let data: Vec<T> = raw.chunks(T::BYTES).map(T::read_le).collect();
            match kind {
                0 => {
                    store.add(&name, Tensor::new(shape, data)?)?;
                }
                1 => store.set_buffer(&name, data),
                k => return Err(Error::Format(format!("unknown entry kind {k}"))),
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last entry".into()));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
