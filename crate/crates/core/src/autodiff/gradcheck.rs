//! Central finite-difference verification of tape gradients (f64 only).

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

use super::backend::Backend;
use super::tape::{Tape, Var};

/// Denominator floor for the relative error.
pub const ABS_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter index, flat coordinate)` of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub coordinates: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `analytic` against `(f(p + eps) - f(p - eps)) / (2 eps)` for
/// every coordinate of every parameter.
pub fn compare_gradients(
    f: impl Fn(&[Tensor4<f64>]) -> Result<f64>,
    params: &[Tensor4<f64>],
    analytic: &[Tensor4<f64>],
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    if analytic.len() != params.len() {
        return Err(Error::InvalidArgument(format!(
            "{} analytic gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    let mut probe = params.to_vec();
    let mut max_rel = 0.0f64;
    let mut worst = None;
    let mut coordinates = 0;
    for (p, a) in analytic.iter().enumerate() {
        if a.shape() != params[p].shape() {
            return Err(Error::shape("compare_gradients", params[p].shape(), a.shape()));
        }
        for i in 0..params[p].len() {
            let orig = params[p].data()[i];
            probe[p].data_mut()[i] = orig + epsilon;
            let plus = f(&probe)?;
            probe[p].data_mut()[i] = orig - epsilon;
            let minus = f(&probe)?;
            probe[p].data_mut()[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite {
                    op: format!("finite-difference probe of parameter {p}, coordinate {i}"),
                });
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = a.data()[i];
            let denom = analytic.abs().max(numeric.abs()).max(ABS_FLOOR);
            let rel = (analytic - numeric).abs() / denom;
            if rel > max_rel || worst.is_none() {
                max_rel = max_rel.max(rel);
                worst = Some((p, i));
            }
            coordinates += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        worst,
        coordinates,
        tolerance,
        pass: max_rel <= tolerance,
    })
}

/// Builds `f` on a fresh tape, back-propagates, and checks every parameter
/// gradient against finite differences.
pub fn finite_diff_check<F>(
    f: F,
    params: &[Tensor4<f64>],
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |ps: &[Tensor4<f64>]| -> Result<(Tape<f64>, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let s = tape.value(&out).shape();
        if s.numel() != 1 {
            return Err(Error::shape("finite_diff_check", "scalar-valued function", s));
        }
        Ok((tape, vars, out))
    };
    let (tape, vars, out) = eval(params)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor4<f64>> = vars.iter().map(|&v| grads.wrt(v)).collect();
    drop(tape);
    compare_gradients(
        |ps| {
            let (tape, _, out) = eval(ps)?;
            Ok(tape.value(&out).item())
        },
        params,
        &analytic,
        epsilon,
        tolerance,
    )
}
