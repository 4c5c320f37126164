use std::collections::HashMap;

use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::ops;
use crate::rng::Rng;
use crate::tensor::{Scalar, Shape, Tensor4};

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// Uniform on `[-b, b]` with `b = sqrt(1 / fan_in)` (Kaiming-uniform, `a = sqrt(5)`).
    KaimingUniform { fan_in: usize },
    Zeros,
    /// Per-output-channel norm of the named direction tensor, so that a
    /// weight-normalized kernel starts equal to its raw initialization.
    NormOf(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Shape,
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: impl Into<Shape>, init: Init) -> Self {
        ParamSpec {
            name: name.into(),
            shape: shape.into(),
            init,
        }
    }
}

/// Named parameter table in registration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T: Scalar> {
    entries: Vec<(String, Tensor4<T>)>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        ParamStore {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    /// Draws every parameter in `specs` order from `rng`.
    pub fn initialize(specs: &[ParamSpec], rng: &mut Rng) -> Result<Self> {
        let mut store = ParamStore::default();
        for spec in specs {
            let t = match &spec.init {
                Init::KaimingUniform { fan_in } => {
                    let bound = (1.0 / (*fan_in).max(1) as f64).sqrt();
                    let data = (0..spec.shape.numel())
                        .map(|_| T::of(rng.uniform(-bound, bound)))
                        .collect();
                    Tensor4::from_vec(spec.shape, data)?
                }
                Init::Zeros => Tensor4::zeros(spec.shape),
                Init::NormOf(dir) => {
                    let v = store.get(dir)?;
                    let norms = ops::direction_norms(v);
                    Tensor4::from_vec(spec.shape, norms.into_iter().map(T::of).collect())?
                }
            };
            store.insert(spec.name.clone(), t)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, name: String, t: Tensor4<T>) -> Result<()> {
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, t));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor4<T>> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].1)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor4<T>> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i].1),
            None => Err(Error::InvalidArgument(format!("no parameter named `{name}`"))),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor4<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor4<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.cast())).collect(),
            index: self.index.clone(),
        }
    }

    /// Registers every parameter as a trainable leaf.
    pub fn bind<B: Backend<T>>(&self, be: &mut B) -> Bound<B::Var> {
        let vars = self
            .entries
            .iter()
            .map(|(n, t)| (n.clone(), be.param(t.clone())))
            .collect();
        Bound::new(vars)
    }
}

/// Parameters registered on a backend, looked up by name during forward.
pub struct Bound<V> {
    vars: Vec<(String, V)>,
    index: HashMap<String, usize>,
}

impl<V: Clone> Bound<V> {
    pub fn new(vars: Vec<(String, V)>) -> Self {
        let index = vars.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        Bound { vars, index }
    }

    pub fn get(&self, name: &str) -> Result<&V> {
        self.index
            .get(name)
            .map(|&i| &self.vars[i].1)
            .ok_or_else(|| Error::InvalidArgument(format!("parameter `{name}` not bound")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &V)> {
        self.vars.iter().map(|(n, v)| (n.as_str(), v))
    }
}
