use crate::error::{Error, Result};
use crate::nn::ParamStore;
use crate::tensor::{Scalar, Tensor4};

/// Adam with bias correction. Moments mirror the parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T: Scalar> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: ParamStore<T>,
    pub v: ParamStore<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros = |p: &ParamStore<T>| {
            let mut s = ParamStore::default();
            for (n, t) in p.iter() {
                s.insert(n.to_string(), Tensor4::zeros(t.shape())).expect("names unique in source");
            }
            s
        };
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros(params),
            v: zeros(params),
        }
    }

    /// One update with learning rate `lr`. `grads` pairs every parameter
    /// name with its gradient. Nothing is modified if any gradient is
    /// non-finite or misshapen.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &[(String, Tensor4<T>)], lr: f64) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (name, g) in grads {
            let p = params.get(name)?;
            if g.shape() != p.shape() {
                return Err(Error::shape("adam", format!("{} for `{name}`", p.shape()), g.shape()));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite {
                    op: format!("gradient of `{name}`"),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (name, g) in grads {
            let m = self.m.get_mut(name)?.data_mut();
            let v = self.v.get_mut(name)?.data_mut();
            let p = params.get_mut(name)?.data_mut();
            for i in 0..p.len() {
                let gi = g.data()[i].as_f64();
                let mi = b1 * m[i].as_f64() + (1.0 - b1) * gi;
                let vi = b2 * v[i].as_f64() + (1.0 - b2) * gi * gi;
                m[i] = T::of(mi);
                v[i] = T::of(vi);
                let update = lr * (mi / c1) / ((vi / c2).sqrt() + eps);
                p[i] = T::of(p[i].as_f64() - update);
            }
        }
        Ok(())
    }
}
