//! Finite-difference checks of the convolution layers' gradients.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use stgcn_autodiff::gradcheck::{central_difference, max_relative_error};
use stgcn_autodiff::{Tape, Tensor, TensorError};
use stgcn_graph::{partition_adjacency, spatial_partition, GraphLayout, PartitionStrategy};
use stgcn_model::{spatial_graph_conv, temporal_conv};

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| uniform(rng) * 2.0 - 1.0).collect(),
    )
    .unwrap()
}

fn sign27_adjacency(rng: &mut ChaCha8Rng) -> Vec<Tensor> {
    let layout = GraphLayout::builtin("sign-27").unwrap();
    let v = layout.num_nodes();
    let frame: Vec<[f64; 2]> = (0..v)
        .map(|_| [uniform(rng) * 2.0 - 1.0, uniform(rng) * 2.0 - 1.0])
        .collect();
    let assignment = spatial_partition(&layout, &frame).unwrap();
    let adj = partition_adjacency(
        &layout,
        PartitionStrategy::SpatialConfiguration,
        Some(&assignment),
    )
    .unwrap();
    (0..adj.partition_count())
        .map(|k| Tensor::new(vec![v, v], adj.matrix(k).to_vec()).unwrap())
        .collect()
}

#[test]
fn spatial_conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bad_cafe);
    let (t, v, c_in, c_out) = (3, 27, 2, 3);
    for _ in 0..5 {
        let adjacency = sign27_adjacency(&mut rng);
        let cotangent = random_tensor(&mut rng, &[t, v, c_out]);
        // Inputs: x, then the three partition weights.
        let inputs = vec![
            random_tensor(&mut rng, &[t, v, c_in]),
            random_tensor(&mut rng, &[c_in, c_out]),
            random_tensor(&mut rng, &[c_in, c_out]),
            random_tensor(&mut rng, &[c_in, c_out]),
        ];
        let eval =
            |probe: &[Tensor], grads_for: Option<&mut Vec<Tensor>>| -> Result<f64, TensorError> {
                let mut tape = Tape::new();
                let wants_grads = grads_for.is_some();
                let refs: Vec<_> = probe
                    .iter()
                    .map(|t| tape.leaf(t.clone(), wants_grads))
                    .collect();
                let adj_refs: Vec<_> = adjacency
                    .iter()
                    .map(|a| tape.leaf(a.clone(), false))
                    .collect();
                let out = spatial_graph_conv(&mut tape, refs[0], &adj_refs, &refs[1..])
                    .expect("conv builds");
                let c_ref = tape.leaf(cotangent.clone(), false);
                let weighted = tape.mul(out, c_ref)?;
                let loss = tape.sum_all(weighted)?;
                let value = tape.value(loss)?.item()?;
                if let Some(slot) = grads_for {
                    let mut grads = tape.backward(loss)?;
                    *slot = refs
                        .iter()
                        .map(|&r| grads.take(r).expect("leaf receives a gradient"))
                        .collect();
                }
                Ok(value)
            };

        let mut analytic = Vec::new();
        eval(&inputs, Some(&mut analytic)).unwrap();
        let numeric = central_difference(|p| eval(p, None), &inputs, 1e-5).unwrap();
        for (name, a, n) in ["x", "w0", "w1", "w2"]
            .iter()
            .zip(&analytic)
            .zip(&numeric)
            .map(|((name, a), n)| (name, a, n))
        {
            let err = max_relative_error(a, n);
            assert!(err <= 1e-4, "{name}: max relative error {err:.3e}");
        }
    }
}

#[test]
fn temporal_conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e3a_0001);
    let (t, v, c_in, c_out, window) = (6usize, 3, 2, 3, 3);
    for stride in [1usize, 2] {
        for _ in 0..5 {
            let t_out = t.div_ceil(stride);
            let cotangent = random_tensor(&mut rng, &[t_out, v, c_out]);
            let inputs = vec![
                random_tensor(&mut rng, &[t, v, c_in]),
                random_tensor(&mut rng, &[window * c_in, c_out]),
                random_tensor(&mut rng, &[c_out]),
            ];
            let eval = |probe: &[Tensor],
                        grads_for: Option<&mut Vec<Tensor>>|
             -> Result<f64, TensorError> {
                let mut tape = Tape::new();
                let wants_grads = grads_for.is_some();
                let refs: Vec<_> = probe
                    .iter()
                    .map(|t| tape.leaf(t.clone(), wants_grads))
                    .collect();
                let out = temporal_conv(&mut tape, refs[0], refs[1], Some(refs[2]), window, stride)
                    .expect("conv builds");
                let c_ref = tape.leaf(cotangent.clone(), false);
                let weighted = tape.mul(out, c_ref)?;
                let loss = tape.sum_all(weighted)?;
                let value = tape.value(loss)?.item()?;
                if let Some(slot) = grads_for {
                    let mut grads = tape.backward(loss)?;
                    *slot = refs
                        .iter()
                        .map(|&r| grads.take(r).expect("leaf receives a gradient"))
                        .collect();
                }
                Ok(value)
            };

            let mut analytic = Vec::new();
            eval(&inputs, Some(&mut analytic)).unwrap();
            let numeric = central_difference(|p| eval(p, None), &inputs, 1e-5).unwrap();
            for (name, a, n) in ["x", "weight", "bias"]
                .iter()
                .zip(&analytic)
                .zip(&numeric)
                .map(|((name, a), n)| (name, a, n))
            {
                let err = max_relative_error(a, n);
                assert!(err <= 1e-4, "stride {stride} {name}: {err:.3e}");
            }
        }
    }
}
