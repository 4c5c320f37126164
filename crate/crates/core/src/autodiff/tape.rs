//! Append-only computation record with reverse-mode gradients.

use crate::error::{Error, Result};
use crate::ops::{self, conv, elementwise, structural, weight_norm};
use crate::tensor::{Scalar, Shape, Tensor4};

use super::backend::{finite, Backend};

/// Handle to a node on a [`Tape`]. Ids increase in recording order, so
/// inputs always precede outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    Conv2d {
        x: usize,
        w: usize,
        b: Option<usize>,
        pad: usize,
    },
    WeightNorm {
        v: usize,
        g: usize,
    },
    Add(usize, usize),
    Mul(usize, usize),
    MulChannelwise {
        u: usize,
        alpha: usize,
    },
    Relu(usize),
    Sigmoid(usize),
    Scale(usize, T),
    Concat(Vec<usize>),
    GlobalAvgPool(usize),
    PixelShuffle(usize, usize),
    ChannelConv1d {
        z: usize,
        kernel: usize,
    },
    Sum(usize),
    L1Loss {
        sr: usize,
        hr: usize,
    },
}

struct Node<T> {
    op: Op<T>,
    value: Tensor4<T>,
    needs_grad: bool,
}

/// Single-writer recording of one forward pass.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor4<T>>>,
    shapes: Vec<Shape>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of a node; zeros when the node does not influence the loss.
    pub fn wrt(&self, v: Var) -> Tensor4<T> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor4::zeros(self.shapes[v.0]),
        }
    }

    /// Moves the gradient out, leaving zeros behind.
    pub fn take(&mut self, v: Var) -> Tensor4<T> {
        self.grads[v.0]
            .take()
            .unwrap_or_else(|| Tensor4::zeros(self.shapes[v.0]))
    }

    pub fn reached(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, name: &str, op: Op<T>, value: Tensor4<T>) -> Result<Var> {
        let value = finite(name, value)?;
        let needs_grad = match &op {
            Op::Leaf => unreachable!("leaves are pushed directly"),
            Op::Conv2d { x, w, b, .. } => {
                self.ng(*x) || self.ng(*w) || b.map(|b| self.ng(b)).unwrap_or(false)
            }
            Op::WeightNorm { v, g } => self.ng(*v) || self.ng(*g),
            Op::Add(a, b) | Op::Mul(a, b) => self.ng(*a) || self.ng(*b),
            Op::MulChannelwise { u, alpha } => self.ng(*u) || self.ng(*alpha),
            Op::Relu(x)
            | Op::Sigmoid(x)
            | Op::Scale(x, _)
            | Op::GlobalAvgPool(x)
            | Op::PixelShuffle(x, _)
            | Op::Sum(x) => self.ng(*x),
            Op::Concat(xs) => xs.iter().any(|&x| self.ng(x)),
            Op::ChannelConv1d { z, kernel } => self.ng(*z) || self.ng(*kernel),
            Op::L1Loss { sr, hr } => self.ng(*sr) || self.ng(*hr),
        };
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn ng(&self, i: usize) -> bool {
        self.nodes[i].needs_grad
    }

    fn val(&self, i: usize) -> &Tensor4<T> {
        &self.nodes[i].value
    }

    /// Reverse traversal from a scalar loss node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let ls = self.nodes[loss.0].value.shape();
        if ls != Shape::scalar() {
            return Err(Error::shape("backward", "scalar loss 1x1x1x1", ls));
        }
        let mut grads: Vec<Option<Tensor4<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor4::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let g = match &node.op {
                Op::Leaf => continue,
                _ => match grads[i].take() {
                    Some(g) => g,
                    None => continue,
                },
            };
            self.propagate(&node.op, &node.value, &g, &mut grads);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }

    fn propagate(&self, op: &Op<T>, out: &Tensor4<T>, g: &Tensor4<T>, grads: &mut [Option<Tensor4<T>>]) {
        let acc = |grads: &mut [Option<Tensor4<T>>], i: usize, d: Tensor4<T>| match &mut grads[i] {
            Some(e) => e.add_assign(&d),
            slot @ None => *slot = Some(d),
        };
        match *op {
            Op::Leaf => {}
            Op::Conv2d { x, w, b, pad } => {
                if self.ng(x) {
                    let d = conv::conv2d_grad_input(self.val(x).shape(), self.val(w), g, pad);
                    acc(grads, x, d);
                }
                if self.ng(w) {
                    let d = conv::conv2d_grad_weight(self.val(x), self.val(w).shape(), g, pad);
                    acc(grads, w, d);
                }
                if let Some(b) = b.filter(|&b| self.ng(b)) {
                    acc(grads, b, conv::conv2d_grad_bias(self.val(b).shape(), g));
                }
            }
            Op::WeightNorm { v, g: gain } => {
                let (dv, dg) = weight_norm::weight_norm_grads(self.val(v), self.val(gain), g);
                if self.ng(v) {
                    acc(grads, v, dv);
                }
                if self.ng(gain) {
                    acc(grads, gain, dg);
                }
            }
            Op::Add(a, b) => {
                if self.ng(a) {
                    acc(grads, a, g.clone());
                }
                if self.ng(b) {
                    acc(grads, b, g.clone());
                }
            }
            Op::Mul(a, b) => {
                if self.ng(a) {
                    acc(grads, a, elementwise::mul_grad(g, self.val(b)));
                }
                if self.ng(b) {
                    acc(grads, b, elementwise::mul_grad(g, self.val(a)));
                }
            }
            Op::MulChannelwise { u, alpha } => {
                if self.ng(u) {
                    acc(grads, u, elementwise::mul_channelwise_grad_u(self.val(alpha), g));
                }
                if self.ng(alpha) {
                    acc(grads, alpha, elementwise::mul_channelwise_grad_alpha(self.val(u), g));
                }
            }
            Op::Relu(x) => acc(grads, x, elementwise::relu_grad(self.val(x), g)),
            Op::Sigmoid(x) => acc(grads, x, elementwise::sigmoid_grad(out, g)),
            Op::Scale(x, s) => acc(grads, x, ops::scale(g, s)),
            Op::Concat(ref xs) => {
                let widths: Vec<usize> = xs.iter().map(|&x| self.val(x).shape().c).collect();
                for (&x, d) in xs.iter().zip(structural::split_channels(g, &widths)) {
                    if self.ng(x) {
                        acc(grads, x, d);
                    }
                }
            }
            Op::GlobalAvgPool(x) => {
                acc(grads, x, structural::global_avg_pool_grad(self.val(x).shape(), g))
            }
            Op::PixelShuffle(x, r) => {
                acc(grads, x, ops::pixel_unshuffle(g, r).expect("shape recorded in forward"))
            }
            Op::ChannelConv1d { z, kernel } => {
                let (dz, dk) = structural::channel_conv1d_grads(self.val(z), self.val(kernel), g);
                if self.ng(z) {
                    acc(grads, z, dz);
                }
                if self.ng(kernel) {
                    acc(grads, kernel, dk);
                }
            }
            Op::Sum(x) => acc(grads, x, Tensor4::full(self.val(x).shape(), g.item())),
            Op::L1Loss { sr, hr } => {
                let d = structural::l1_loss_grad(self.val(sr), self.val(hr), g.item());
                if self.ng(hr) {
                    acc(grads, hr, ops::scale(&d, -T::one()));
                }
                if self.ng(sr) {
                    acc(grads, sr, d);
                }
            }
        }
    }
}

impl<T: Scalar> Backend<T> for Tape<T> {
    type Var = Var;

    fn param(&mut self, t: Tensor4<T>) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf,
            value: t,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    fn constant(&mut self, t: Tensor4<T>) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf,
            value: t,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    fn value<'a>(&'a self, v: &'a Var) -> &'a Tensor4<T> {
        &self.nodes[v.0].value
    }

    fn conv2d(&mut self, x: &Var, w: &Var, b: Option<&Var>, padding: usize) -> Result<Var> {
        let out = ops::conv2d(self.val(x.0), self.val(w.0), b.map(|b| self.val(b.0)), padding)?;
        let op = Op::Conv2d {
            x: x.0,
            w: w.0,
            b: b.map(|b| b.0),
            pad: padding,
        };
        self.push("conv2d", op, out)
    }

    fn weight_norm(&mut self, v: &Var, g: &Var) -> Result<Var> {
        let out = ops::weight_norm(self.val(v.0), self.val(g.0))?;
        self.push("weight_norm", Op::WeightNorm { v: v.0, g: g.0 }, out)
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::add(self.val(a.0), self.val(b.0))?;
        self.push("add", Op::Add(a.0, b.0), out)
    }

    fn mul(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = ops::mul(self.val(a.0), self.val(b.0))?;
        self.push("mul", Op::Mul(a.0, b.0), out)
    }

    fn mul_channelwise(&mut self, u: &Var, alpha: &Var) -> Result<Var> {
        let out = ops::mul_channelwise(self.val(u.0), self.val(alpha.0))?;
        self.push(
            "mul_channelwise",
            Op::MulChannelwise {
                u: u.0,
                alpha: alpha.0,
            },
            out,
        )
    }

    fn relu(&mut self, x: &Var) -> Result<Var> {
        let out = ops::relu(self.val(x.0));
        self.push("relu", Op::Relu(x.0), out)
    }

    fn sigmoid(&mut self, x: &Var) -> Result<Var> {
        let out = ops::sigmoid(self.val(x.0));
        self.push("sigmoid", Op::Sigmoid(x.0), out)
    }

    fn scale(&mut self, x: &Var, s: T) -> Result<Var> {
        let out = ops::scale(self.val(x.0), s);
        self.push("scale", Op::Scale(x.0, s), out)
    }

    fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let refs: Vec<&Tensor4<T>> = parts.iter().map(|p| self.val(p.0)).collect();
        let out = ops::concat_channels(&refs)?;
        self.push("concat_channels", Op::Concat(parts.iter().map(|p| p.0).collect()), out)
    }

    fn global_avg_pool(&mut self, x: &Var) -> Result<Var> {
        let out = ops::global_avg_pool(self.val(x.0))?;
        self.push("global_avg_pool", Op::GlobalAvgPool(x.0), out)
    }

    fn pixel_shuffle(&mut self, x: &Var, r: usize) -> Result<Var> {
        let out = ops::pixel_shuffle(self.val(x.0), r)?;
        self.push("pixel_shuffle", Op::PixelShuffle(x.0, r), out)
    }

    fn channel_conv1d(&mut self, z: &Var, kernel: &Var) -> Result<Var> {
        let out = ops::channel_conv1d(self.val(z.0), self.val(kernel.0))?;
        self.push(
            "channel_conv1d",
            Op::ChannelConv1d {
                z: z.0,
                kernel: kernel.0,
            },
            out,
        )
    }

    fn sum(&mut self, x: &Var) -> Result<Var> {
        let out = ops::sum(self.val(x.0));
        self.push("sum", Op::Sum(x.0), out)
    }

    fn l1_loss(&mut self, sr: &Var, hr: &Var) -> Result<Var> {
        let out = ops::l1_loss(self.val(sr.0), self.val(hr.0))?;
        self.push("l1_loss", Op::L1Loss { sr: sr.0, hr: hr.0 }, out)
    }
}
