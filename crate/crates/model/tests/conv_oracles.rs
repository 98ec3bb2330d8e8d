//! Convolution layers against brute-force reference implementations.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use stgcn_autodiff::{Tape, Tensor};
use stgcn_graph::{
    partition_adjacency, spatial_partition, GraphLayout, LayoutSpec, PartitionStrategy,
};
use stgcn_model::{spatial_graph_conv, temporal_conv, ModelError};

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_data(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform(rng) * 2.0 - 1.0).collect()
}

/// Reference spatial convolution: three nested sums, no matrix algebra.
fn spatial_oracle(
    t: usize,
    v: usize,
    c_in: usize,
    c_out: usize,
    adjacency: &[Vec<f64>],
    x: &[f64],
    weights: &[Vec<f64>],
) -> Vec<f64> {
    let mut out = vec![0.0; t * v * c_out];
    for (a, w) in adjacency.iter().zip(weights) {
        for ti in 0..t {
            for vi in 0..v {
                for co in 0..c_out {
                    let mut acc = 0.0;
                    for wi in 0..v {
                        for ci in 0..c_in {
                            acc +=
                                a[vi * v + wi] * x[(ti * v + wi) * c_in + ci] * w[ci * c_out + co];
                        }
                    }
                    out[(ti * v + vi) * c_out + co] += acc;
                }
            }
        }
    }
    out
}

/// All connected simple graphs on `v` labeled nodes, as edge lists.
fn connected_graphs(v: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..v)
        .flat_map(|a| ((a + 1)..v).map(move |b| (a, b)))
        .collect();
    let mut graphs = Vec::new();
    for mask in 0..(1u32 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        // Connectivity by depth-first search over the chosen edges.
        let mut seen = vec![false; v];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(a, b) in &edges {
                let next = if a == node {
                    b
                } else if b == node {
                    a
                } else {
                    continue;
                };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            graphs.push(edges);
        }
    }
    graphs
}

#[test]
fn connected_graph_counts_match_the_known_sequence() {
    assert_eq!(connected_graphs(1).len(), 1);
    assert_eq!(connected_graphs(2).len(), 1);
    assert_eq!(connected_graphs(3).len(), 4);
    assert_eq!(connected_graphs(4).len(), 38);
    assert_eq!(connected_graphs(5).len(), 728);
}

#[test]
fn spatial_conv_matches_oracle_on_every_connected_graph_up_to_five_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90a7_11ce);
    let (t, c_in, c_out) = (3, 2, 3);
    let mut checked = 0usize;
    for v in 1..=5 {
        for edges in connected_graphs(v) {
            let layout = GraphLayout::from_spec(&LayoutSpec {
                name: "enum".to_string(),
                num_nodes: v,
                center: (rng.next_u64() as usize) % v,
                edges,
            })
            .expect("enumerated graph is a valid layout");
            let frame: Vec<[f64; 2]> = (0..v)
                .map(|_| [uniform(&mut rng) * 4.0 - 2.0, uniform(&mut rng) * 4.0 - 2.0])
                .collect();
            let assignment = spatial_partition(&layout, &frame).unwrap();
            for strategy in [
                PartitionStrategy::Uniform,
                PartitionStrategy::SpatialConfiguration,
            ] {
                let adj = match strategy {
                    PartitionStrategy::Uniform => {
                        partition_adjacency(&layout, strategy, None).unwrap()
                    }
                    PartitionStrategy::SpatialConfiguration => {
                        partition_adjacency(&layout, strategy, Some(&assignment)).unwrap()
                    }
                };
                let k = adj.partition_count();
                let matrices: Vec<Vec<f64>> = (0..k).map(|i| adj.matrix(i).to_vec()).collect();
                let x = random_data(&mut rng, t * v * c_in);
                let weights: Vec<Vec<f64>> = (0..k)
                    .map(|_| random_data(&mut rng, c_in * c_out))
                    .collect();

                let mut tape = Tape::new();
                let x_ref = tape.leaf(Tensor::new(vec![t, v, c_in], x.clone()).unwrap(), false);
                let adj_refs: Vec<_> = matrices
                    .iter()
                    .map(|m| tape.leaf(Tensor::new(vec![v, v], m.clone()).unwrap(), false))
                    .collect();
                let w_refs: Vec<_> = weights
                    .iter()
                    .map(|w| tape.leaf(Tensor::new(vec![c_in, c_out], w.clone()).unwrap(), false))
                    .collect();
                let out = spatial_graph_conv(&mut tape, x_ref, &adj_refs, &w_refs).unwrap();
                let got = tape.value(out).unwrap();
                let expected = spatial_oracle(t, v, c_in, c_out, &matrices, &x, &weights);
                assert_eq!(got.shape(), &[t, v, c_out]);
                for (i, (g, e)) in got.data().iter().zip(&expected).enumerate() {
                    assert!(
                        (g - e).abs() <= 1e-10,
                        "v={v} strategy={strategy:?} entry {i}: {g} vs {e}"
                    );
                }
                checked += 1;
            }
        }
    }
    // 772 connected graphs, each under both strategies.
    assert_eq!(checked, 2 * 772);
}

#[test]
fn partition_count_mismatch_is_rejected() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![2, 3, 2]), false);
    let a = tape.leaf(Tensor::zeros(vec![3, 3]), false);
    let w = tape.leaf(Tensor::zeros(vec![2, 2]), false);
    assert!(matches!(
        spatial_graph_conv(&mut tape, x, &[a], &[w, w]),
        Err(ModelError::PartitionCountMismatch { got: 1, weights: 2 })
    ));
    assert!(matches!(
        spatial_graph_conv(&mut tape, x, &[], &[]),
        Err(ModelError::PartitionCountMismatch { .. })
    ));
}

/// Reference temporal convolution: direct sum over taps with explicit
/// zero padding.
#[allow(clippy::too_many_arguments)]
fn temporal_oracle(
    t: usize,
    v: usize,
    c_in: usize,
    c_out: usize,
    window: usize,
    stride: usize,
    x: &[f64],
    weight: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    let pad = (window - 1) / 2;
    let t_out = (t + 2 * pad - window) / stride + 1;
    let mut out = vec![0.0; t_out * v * c_out];
    for to in 0..t_out {
        for vi in 0..v {
            for co in 0..c_out {
                let mut acc = bias[co];
                for g in 0..window {
                    let padded = to * stride + g;
                    if padded < pad || padded >= pad + t {
                        continue;
                    }
                    let ti = padded - pad;
                    for ci in 0..c_in {
                        acc += weight[(g * c_in + ci) * c_out + co] * x[(ti * v + vi) * c_in + ci];
                    }
                }
                out[(to * v + vi) * c_out + co] = acc;
            }
        }
    }
    out
}

#[test]
fn temporal_conv_matches_oracle_for_both_strides() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e3909a1);
    let (t, v, c_in, c_out, window) = (7, 3, 2, 4, 3);
    for stride in [1usize, 2] {
        let x = random_data(&mut rng, t * v * c_in);
        let w = random_data(&mut rng, window * c_in * c_out);
        let b = random_data(&mut rng, c_out);
        let mut tape = Tape::new();
        let x_ref = tape.leaf(Tensor::new(vec![t, v, c_in], x.clone()).unwrap(), false);
        let w_ref = tape.leaf(
            Tensor::new(vec![window * c_in, c_out], w.clone()).unwrap(),
            false,
        );
        let b_ref = tape.leaf(Tensor::new(vec![c_out], b.clone()).unwrap(), false);
        let out = temporal_conv(&mut tape, x_ref, w_ref, Some(b_ref), window, stride).unwrap();
        let got = tape.value(out).unwrap();
        let expected = temporal_oracle(t, v, c_in, c_out, window, stride, &x, &w, &b);
        assert_eq!(got.shape()[0], t.div_ceil(stride));
        for (g, e) in got.data().iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-10, "stride {stride}: {g} vs {e}");
        }
    }
}

#[test]
fn delta_kernel_reproduces_the_input_everywhere() {
    // Window 3 with all mass on the center tap per channel: output equals
    // input at every frame, including the zero-padded boundaries.
    let (t, v, c) = (5, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let x = random_data(&mut rng, t * v * c);
    let mut w = vec![0.0; 3 * c * c];
    for ch in 0..c {
        w[((c + ch) * c) + ch] = 1.0;
    }
    let mut tape = Tape::new();
    let x_ref = tape.leaf(Tensor::new(vec![t, v, c], x.clone()).unwrap(), false);
    let w_ref = tape.leaf(Tensor::new(vec![3 * c, c], w).unwrap(), false);
    let out = temporal_conv(&mut tape, x_ref, w_ref, None, 3, 1).unwrap();
    let got = tape.value(out).unwrap();
    assert_eq!(got.shape(), &[t, v, c]);
    for (g, e) in got.data().iter().zip(&x) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn output_frame_counts_follow_ceiling_division() {
    for window in [3usize, 9] {
        for stride in [1usize, 2] {
            for t in [1usize, 9, 63, 64] {
                if t + 2 * ((window - 1) / 2) < window {
                    continue;
                }
                let mut tape = Tape::new();
                let x = tape.leaf(Tensor::zeros(vec![t, 2, 2]), false);
                let w = tape.leaf(Tensor::zeros(vec![window * 2, 5]), false);
                let out = temporal_conv(&mut tape, x, w, None, window, stride).unwrap();
                assert_eq!(
                    tape.shape(out).unwrap(),
                    &[t.div_ceil(stride), 2, 5],
                    "t={t} window={window} stride={stride}"
                );
            }
        }
    }
}

#[test]
fn even_window_is_rejected() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![4, 2, 2]), false);
    let w = tape.leaf(Tensor::zeros(vec![8, 3]), false);
    assert!(matches!(
        temporal_conv(&mut tape, x, w, None, 4, 1),
        Err(ModelError::EvenTemporalKernel(4))
    ));
}
