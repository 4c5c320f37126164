//! Finite-difference checks of every layer kind and of whole networks, in
//! `f64`. Each case projects the output onto a fixed random tensor so the
//! check sees a scalar that depends on every output element.

use crate::autodiff::{finite_diff_check, Backend, GradCheckReport, Tape, Var};
use crate::error::Result;
use crate::model::{Hran, ModelConfig, Placement, Rafg};
use crate::nn::{Attention, AttentionKind, Bound, Conv, Layer, ParamSpec, ResidualBlock, Upsampler};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor4};

pub const EPSILON: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub name: String,
    pub report: GradCheckReport,
}

fn random(shape: Shape, lo: f64, hi: f64, rng: &mut Rng) -> Tensor4<f64> {
    Tensor4::from_vec(shape, (0..shape.numel()).map(|_| rng.uniform(lo, hi)).collect()).expect("sized to shape")
}

/// Checks `forward` with respect to its input and every parameter in
/// `specs`. Weight-norm gains are drawn positive and away from zero.
pub fn check_forward<F>(specs: &[ParamSpec], input: Shape, seed: u64, forward: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &Bound<Var>, &Var) -> Result<Var>,
{
    let mut rng = Rng::seeded(seed);
    let mut params = vec![random(input, 0.0, 1.0, &mut rng)];
    for s in specs {
        let (lo, hi) = if s.name.ends_with(".g") { (0.5, 1.5) } else { (-0.5, 0.5) };
        params.push(random(s.shape, lo, hi, &mut rng));
    }
    let proj_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    finite_diff_check(
        |tape, vars| {
            let bound = Bound::new(specs.iter().map(|s| s.name.clone()).zip(vars[1..].iter().copied()).collect());
            let out = forward(tape, &bound, &vars[0])?;
            let proj = random(tape.value(&out).shape(), -1.0, 1.0, &mut Rng::seeded(proj_seed));
            let proj = tape.constant(proj);
            let weighted = tape.mul(&out, &proj)?;
            tape.sum(&weighted)
        },
        &params,
        EPSILON,
        TOLERANCE,
    )
}

pub fn check_layer<L: Layer>(layer: &L, input: Shape, seed: u64) -> Result<GradCheckReport> {
    check_forward(&layer.param_specs(), input, seed, |tape, p, x| layer.forward(tape, p, x))
}

pub fn check_rafg(rafg: &Rafg, input: Shape, seed: u64) -> Result<GradCheckReport> {
    check_forward(&rafg.param_specs(), input, seed, |tape, p, x| Ok(rafg.forward(tape, p, x)?.out))
}

pub fn check_model(config: &ModelConfig, h: usize, w: usize, seed: u64) -> Result<GradCheckReport> {
    let net = Hran::new(config)?;
    check_forward(&net.param_specs(), Shape::new(1, 3, h, w), seed, |tape, p, x| net.forward(tape, p, x))
}

fn layer_cases() -> Vec<(String, Result<GradCheckReport>)> {
    let c = 4;
    let x = Shape::new(2, c, 5, 4);
    let att = |k| Attention::new("att", k, c).with_reduction(2);
    let mut out = vec![
        ("conv3x3".to_string(), check_layer(&Conv::new("conv", c, 3, 3, false), x, 1)),
        ("conv1x1".into(), check_layer(&Conv::new("conv", c, 2, 1, false), x, 2)),
        ("conv3x3_weight_norm".into(), check_layer(&Conv::new("conv", c, 3, 3, true), x, 3)),
        ("residual_block".into(), check_layer(&ResidualBlock::new("rb", c, true), x, 4)),
        (
            "residual_block_inplace_lca".into(),
            check_layer(&ResidualBlock::new("rb", c, true).with_inplace_attention(att(AttentionKind::Lca)), x, 5),
        ),
    ];
    for (i, k) in [AttentionKind::Lca, AttentionKind::Ca, AttentionKind::Eca, AttentionKind::Pa]
        .into_iter()
        .enumerate()
    {
        out.push((format!("attention_{k}"), check_layer(&att(k), x, 10 + i as u64)));
    }
    for s in [2, 3, 4] {
        let up = Upsampler::new("up", c, 2, s, true).expect("supported scale");
        out.push((format!("upsampler_x{s}"), check_layer(&up, Shape::new(1, c, 3, 3), 20 + s as u64)));
    }
    out
}

fn group_and_model_cases() -> Vec<(String, Result<GradCheckReport>)> {
    let rafg_cfg = ModelConfig {
        channels: 4,
        blocks_per_rafg: 2,
        ..ModelConfig::tiny()
    };
    let tiny = ModelConfig::tiny();
    vec![
        ("rafg_c4_b2".into(), check_rafg(&Rafg::new(1, &rafg_cfg), Shape::new(1, 4, 4, 4), 30)),
        ("hran_tiny".into(), check_model(&tiny, 4, 4, 31)),
        ("hran_tiny_banks_off".into(), check_model(&ModelConfig { banks: false, ..tiny.clone() }, 4, 4, 32)),
        (
            "hran_tiny_in_place".into(),
            check_model(&ModelConfig { placement: Placement::InPlace, ..tiny.clone() }, 4, 4, 33),
        ),
    ]
}

/// Every case, in a fixed order. Errors inside a case are returned, not
/// folded into a failing report.
pub fn run_suite() -> Result<Vec<CaseReport>> {
    layer_cases()
        .into_iter()
        .chain(group_and_model_cases())
        .map(|(name, r)| r.map(|report| CaseReport { name, report }))
        .collect()
}
