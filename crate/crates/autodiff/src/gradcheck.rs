//! Finite-difference gradient verification.
//!
//! [`central_difference`] is the oracle: it differentiates a black-box
//! scalar function numerically, never touching the tape's backward pass.
//! [`op_gradient_reports`] runs that oracle against the analytic gradients
//! of every differentiable tape operation at randomly drawn points and
//! reports the worst relative error per operation.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::TensorError;
use crate::tape::{Tape, TensorRef};
use crate::tensor::Tensor;

/// Central finite differences: per coordinate of each input,
/// `(f(x + e) - f(x - e)) / (2e)`.
pub fn central_difference<F>(
    mut f: F,
    inputs: &[Tensor],
    epsilon: f64,
) -> Result<Vec<Tensor>, TensorError>
where
    F: FnMut(&[Tensor]) -> Result<f64, TensorError>,
{
    let mut grads = Vec::with_capacity(inputs.len());
    for i in 0..inputs.len() {
        let mut grad = vec![0.0; inputs[i].numel()];
        for (j, slot) in grad.iter_mut().enumerate() {
            let mut probe: Vec<Tensor> = inputs.to_vec();
            probe[i].data_mut()[j] += epsilon;
            let plus = f(&probe)?;
            probe[i].data_mut()[j] -= 2.0 * epsilon;
            let minus = f(&probe)?;
            *slot = (plus - minus) / (2.0 * epsilon);
        }
        grads.push(Tensor::new(inputs[i].shape().to_vec(), grad)?);
    }
    Ok(grads)
}

/// Worst-coordinate relative error `|a - n| / max(|a|, |n|, 1)`. Mismatched
/// shapes count as infinitely wrong.
pub fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    if analytic.shape() != numeric.shape() {
        return f64::INFINITY;
    }
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Worst finite-difference disagreement seen for one operation.
#[derive(Clone, Debug)]
pub struct OpGradReport {
    pub op: &'static str,
    pub points: usize,
    pub max_relative_error: f64,
}

enum CaseOp {
    Add,
    AddBias,
    Mul,
    Relu,
    Scale(f64),
    Matmul,
    Unfold {
        window: usize,
        stride: usize,
        pad: usize,
    },
    GlobalAvgPool,
    SumAll,
    MeanAll,
    Softmax,
    CrossEntropy(Vec<usize>),
    StackRows,
}

fn apply(op: &CaseOp, tape: &mut Tape, refs: &[TensorRef]) -> Result<TensorRef, TensorError> {
    match op {
        CaseOp::Add => tape.add(refs[0], refs[1]),
        CaseOp::AddBias => tape.add_bias(refs[0], refs[1]),
        CaseOp::Mul => tape.mul(refs[0], refs[1]),
        CaseOp::Relu => tape.relu(refs[0]),
        CaseOp::Scale(factor) => tape.scale(refs[0], *factor),
        CaseOp::Matmul => tape.matmul(refs[0], refs[1]),
        CaseOp::Unfold {
            window,
            stride,
            pad,
        } => tape.unfold_time(refs[0], *window, *stride, *pad),
        CaseOp::GlobalAvgPool => tape.global_avg_pool(refs[0]),
        CaseOp::SumAll => tape.sum_all(refs[0]),
        CaseOp::MeanAll => tape.mean_all(refs[0]),
        CaseOp::Softmax => tape.softmax(refs[0]),
        CaseOp::CrossEntropy(labels) => tape.cross_entropy(refs[0], labels),
        CaseOp::StackRows => tape.stack_rows(refs),
    }
}

/// Runs the op and reduces its output to a scalar; non-scalar outputs are
/// contracted against a fixed cotangent so every output coordinate
/// contributes to the checked derivative.
fn scalar_loss(
    op: &CaseOp,
    tape: &mut Tape,
    refs: &[TensorRef],
    cotangent: Option<&Tensor>,
) -> Result<TensorRef, TensorError> {
    let out = apply(op, tape, refs)?;
    match cotangent {
        Some(c) => {
            let c_ref = tape.leaf(c.clone(), false);
            let weighted = tape.mul(out, c_ref)?;
            tape.sum_all(weighted)
        }
        None => Ok(out),
    }
}

fn evaluate(
    op: &CaseOp,
    inputs: &[Tensor],
    cotangent: Option<&Tensor>,
) -> Result<f64, TensorError> {
    let mut tape = Tape::new();
    let refs: Vec<TensorRef> = inputs.iter().map(|t| tape.leaf(t.clone(), false)).collect();
    let loss = scalar_loss(op, &mut tape, &refs, cotangent)?;
    tape.value(loss)?.item()
}

fn analytic_gradients(
    op: &CaseOp,
    inputs: &[Tensor],
    cotangent: Option<&Tensor>,
) -> Result<Vec<Tensor>, TensorError> {
    let mut tape = Tape::new();
    let refs: Vec<TensorRef> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let loss = scalar_loss(op, &mut tape, &refs, cotangent)?;
    let mut grads = tape.backward(loss)?;
    Ok(refs
        .iter()
        .zip(inputs)
        .map(|(&r, input)| {
            grads
                .take(r)
                .unwrap_or_else(|| Tensor::zeros(input.shape().to_vec()))
        })
        .collect())
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + unit * (hi - lo)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| uniform(rng, -2.0, 2.0)).collect();
    Tensor::new(shape.to_vec(), data).expect("bounded values are finite")
}

/// Like [`random_tensor`] but resampling coordinates out of the band around
/// zero where the relu kink would poison finite differences.
fn random_tensor_off_kink(rng: &mut ChaCha8Rng, shape: &[usize], band: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v = uniform(rng, -2.0, 2.0);
            if v.abs() >= band {
                break v;
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("bounded values are finite")
}

/// Names reported by [`op_gradient_reports`], one per differentiable
/// operation (matmul and unfold appear once per supported shape family).
pub const CHECKED_OPS: &[&str] = &[
    "add",
    "add_bias",
    "mul",
    "relu",
    "scale",
    "matmul_2d_2d",
    "matmul_3d_2d",
    "matmul_2d_3d",
    "unfold_time",
    "unfold_time_strided",
    "global_avg_pool",
    "sum_all",
    "mean_all",
    "softmax",
    "cross_entropy",
    "stack_rows",
];

/// Checks every differentiable operation at `points` random input draws,
/// comparing tape gradients against [`central_difference`].
pub fn op_gradient_reports(
    points: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<OpGradReport>, TensorError> {
    CHECKED_OPS
        .iter()
        .enumerate()
        .map(|(op_index, &name)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add(op_index as u64 * 0x9E37_79B9));
            let mut worst = 0.0f64;
            for _ in 0..points {
                let (op, inputs) = draw_case(name, &mut rng);
                let cotangent =
                    output_shape(&op, &inputs)?.map(|shape| random_tensor(&mut rng, &shape));
                let analytic = analytic_gradients(&op, &inputs, cotangent.as_ref())?;
                let numeric = central_difference(
                    |probe| evaluate(&op, probe, cotangent.as_ref()),
                    &inputs,
                    epsilon,
                )?;
                for (a, n) in analytic.iter().zip(&numeric) {
                    worst = worst.max(max_relative_error(a, n));
                }
            }
            Ok(OpGradReport {
                op: name,
                points,
                max_relative_error: worst,
            })
        })
        .collect()
}

fn output_shape(op: &CaseOp, inputs: &[Tensor]) -> Result<Option<Vec<usize>>, TensorError> {
    let mut tape = Tape::new();
    let refs: Vec<TensorRef> = inputs.iter().map(|t| tape.leaf(t.clone(), false)).collect();
    let out = apply(op, &mut tape, &refs)?;
    let shape = tape.shape(out)?.to_vec();
    Ok(if shape.is_empty() { None } else { Some(shape) })
}

fn draw_case(name: &str, rng: &mut ChaCha8Rng) -> (CaseOp, Vec<Tensor>) {
    match name {
        "add" => (
            CaseOp::Add,
            vec![random_tensor(rng, &[3, 4]), random_tensor(rng, &[3, 4])],
        ),
        "add_bias" => (
            CaseOp::AddBias,
            vec![random_tensor(rng, &[4, 3]), random_tensor(rng, &[3])],
        ),
        "mul" => (
            CaseOp::Mul,
            vec![random_tensor(rng, &[3, 4]), random_tensor(rng, &[3, 4])],
        ),
        "relu" => (
            CaseOp::Relu,
            vec![random_tensor_off_kink(rng, &[4, 5], 1e-3)],
        ),
        "scale" => {
            let factor = uniform(rng, -2.0, 2.0);
            (CaseOp::Scale(factor), vec![random_tensor(rng, &[3, 3])])
        }
        "matmul_2d_2d" => (
            CaseOp::Matmul,
            vec![random_tensor(rng, &[3, 4]), random_tensor(rng, &[4, 2])],
        ),
        "matmul_3d_2d" => (
            CaseOp::Matmul,
            vec![random_tensor(rng, &[2, 3, 4]), random_tensor(rng, &[4, 2])],
        ),
        "matmul_2d_3d" => (
            CaseOp::Matmul,
            vec![random_tensor(rng, &[3, 4]), random_tensor(rng, &[2, 4, 3])],
        ),
        "unfold_time" => (
            CaseOp::Unfold {
                window: 3,
                stride: 1,
                pad: 1,
            },
            vec![random_tensor(rng, &[5, 2, 3])],
        ),
        "unfold_time_strided" => (
            CaseOp::Unfold {
                window: 3,
                stride: 2,
                pad: 1,
            },
            vec![random_tensor(rng, &[6, 2, 2])],
        ),
        "global_avg_pool" => (CaseOp::GlobalAvgPool, vec![random_tensor(rng, &[4, 3, 2])]),
        "sum_all" => (CaseOp::SumAll, vec![random_tensor(rng, &[3, 4])]),
        "mean_all" => (CaseOp::MeanAll, vec![random_tensor(rng, &[3, 4])]),
        "softmax" => (CaseOp::Softmax, vec![random_tensor(rng, &[4, 5])]),
        "cross_entropy" => {
            let logits = random_tensor(rng, &[5, 4]);
            let labels = (0..5).map(|_| (rng.next_u64() % 4) as usize).collect();
            (CaseOp::CrossEntropy(labels), vec![logits])
        }
        "stack_rows" => (
            CaseOp::StackRows,
            vec![
                random_tensor(rng, &[4]),
                random_tensor(rng, &[4]),
                random_tensor(rng, &[4]),
            ],
        ),
        other => unreachable!("unknown gradient-check case {other}"),
    }
}
