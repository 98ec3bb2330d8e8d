//! Forward-value oracles and error-path behavior for every tape operation.

use stgcn_autodiff::{Tape, Tensor, TensorError};

fn t(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
}

#[test]
fn add_and_mul_elementwise() {
    let mut tape = Tape::new();
    let a = tape.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]), false);
    let b = tape.leaf(t(&[2, 2], &[10.0, 20.0, 30.0, 40.0]), false);
    let sum = tape.add(a, b).unwrap();
    let prod = tape.mul(a, b).unwrap();
    assert_eq!(tape.value(sum).unwrap().data(), &[11.0, 22.0, 33.0, 44.0]);
    assert_eq!(tape.value(prod).unwrap().data(), &[10.0, 40.0, 90.0, 160.0]);
}

#[test]
fn add_shape_mismatch_errors() {
    let mut tape = Tape::new();
    let a = tape.leaf(Tensor::zeros(vec![2, 2]), false);
    let b = tape.leaf(Tensor::zeros(vec![4]), false);
    assert!(matches!(
        tape.add(a, b),
        Err(TensorError::ShapeMismatch { op: "add", .. })
    ));
}

#[test]
fn add_bias_broadcasts_over_leading_axes() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[2, 3], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), false);
    let b = tape.leaf(t(&[3], &[10.0, 20.0, 30.0]), false);
    let out = tape.add_bias(x, b).unwrap();
    assert_eq!(
        tape.value(out).unwrap().data(),
        &[10.0, 20.0, 30.0, 11.0, 21.0, 31.0]
    );
}

#[test]
fn relu_clamps_negatives() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[4], &[-2.0, -0.5, 0.5, 2.0]), false);
    let out = tape.relu(x).unwrap();
    assert_eq!(tape.value(out).unwrap().data(), &[0.0, 0.0, 0.5, 2.0]);
}

#[test]
fn scale_rejects_non_finite_factor() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![2]), false);
    assert!(matches!(
        tape.scale(x, f64::NAN),
        Err(TensorError::NonFiniteScale(_))
    ));
}

#[test]
fn non_finite_forward_value_is_caught_at_the_producing_op() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[1], &[1e308]), false);
    let err = tape.add(x, x).unwrap_err();
    assert!(matches!(err, TensorError::NonFinite("add")));
}

#[test]
fn matmul_2d_matches_triple_loop() {
    let a_data: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
    let b_data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.3).cos()).collect();
    let mut expected = vec![0.0; 8];
    for i in 0..2 {
        for j in 0..4 {
            for l in 0..3 {
                expected[i * 4 + j] += a_data[i * 3 + l] * b_data[l * 4 + j];
            }
        }
    }
    let mut tape = Tape::new();
    let a = tape.leaf(t(&[2, 3], &a_data), false);
    let b = tape.leaf(t(&[3, 4], &b_data), false);
    let out = tape.matmul(a, b).unwrap();
    let got = tape.value(out).unwrap();
    assert_eq!(got.shape(), &[2, 4]);
    for (g, e) in got.data().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-12);
    }
}

#[test]
fn batched_matmul_matches_per_slice_products() {
    let mut tape = Tape::new();
    let a3 = t(
        &[2, 2, 3],
        &(0..12).map(|i| i as f64 * 0.5).collect::<Vec<_>>(),
    );
    let b2 = t(&[3, 2], &(0..6).map(|i| i as f64 - 3.0).collect::<Vec<_>>());
    let a_ref = tape.leaf(a3.clone(), false);
    let b_ref = tape.leaf(b2.clone(), false);
    let out = tape.matmul(a_ref, b_ref).unwrap();
    let got = tape.value(out).unwrap();
    assert_eq!(got.shape(), &[2, 2, 2]);
    for batch in 0..2 {
        let mut tape2 = Tape::new();
        let slice = t(&[2, 3], &a3.data()[batch * 6..(batch + 1) * 6]);
        let sa = tape2.leaf(slice, false);
        let sb = tape2.leaf(b2.clone(), false);
        let sout = tape2.matmul(sa, sb).unwrap();
        assert_eq!(
            &got.data()[batch * 4..(batch + 1) * 4],
            tape2.value(sout).unwrap().data()
        );
    }

    let mut tape3 = Tape::new();
    let a2 = t(
        &[2, 3],
        &(0..6).map(|i| i as f64 * 0.25).collect::<Vec<_>>(),
    );
    let b3 = t(
        &[2, 3, 2],
        &(0..12).map(|i| (i as f64).sin()).collect::<Vec<_>>(),
    );
    let a_ref = tape3.leaf(a2.clone(), false);
    let b_ref = tape3.leaf(b3.clone(), false);
    let out = tape3.matmul(a_ref, b_ref).unwrap();
    let got = tape3.value(out).unwrap();
    assert_eq!(got.shape(), &[2, 2, 2]);
    for batch in 0..2 {
        let mut tape4 = Tape::new();
        let sa = tape4.leaf(a2.clone(), false);
        let slice = t(&[3, 2], &b3.data()[batch * 6..(batch + 1) * 6]);
        let sb = tape4.leaf(slice, false);
        let sout = tape4.matmul(sa, sb).unwrap();
        assert_eq!(
            &got.data()[batch * 4..(batch + 1) * 4],
            tape4.value(sout).unwrap().data()
        );
    }
}

#[test]
fn matmul_inner_dimension_mismatch_errors() {
    let mut tape = Tape::new();
    let a = tape.leaf(Tensor::zeros(vec![2, 3]), false);
    let b = tape.leaf(Tensor::zeros(vec![4, 2]), false);
    assert!(matches!(
        tape.matmul(a, b),
        Err(TensorError::ShapeMismatch { op: "matmul", .. })
    ));
}

#[test]
fn unfold_time_matches_a_direct_gather() {
    // [t=4, v=2, c=2], window 3, stride 1, pad 1.
    let data: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[4, 2, 2], &data), false);
    let out = tape.unfold_time(x, 3, 1, 1).unwrap();
    let got = tape.value(out).unwrap();
    assert_eq!(got.shape(), &[4, 2, 6]);
    let at = |ti: i64, vi: usize, ci: usize| -> f64 {
        if (0..4).contains(&ti) {
            data[(ti as usize * 2 + vi) * 2 + ci]
        } else {
            0.0
        }
    };
    for to in 0..4i64 {
        for vi in 0..2 {
            for g in 0..3i64 {
                for ci in 0..2 {
                    let expected = at(to + g - 1, vi, ci);
                    let idx = ((to as usize * 2 + vi) * 3 + g as usize) * 2 + ci;
                    assert_eq!(got.data()[idx], expected, "to={to} vi={vi} g={g} ci={ci}");
                }
            }
        }
    }
}

#[test]
fn unfold_output_length_is_ceil_t_over_stride_for_same_padding() {
    for t_len in [1usize, 2, 5, 9, 63] {
        for window in [1usize, 3, 5, 9] {
            for stride in [1usize, 2, 3] {
                let pad = (window - 1) / 2;
                let mut tape = Tape::new();
                let x = tape.leaf(Tensor::zeros(vec![t_len, 2, 1]), false);
                let out = tape.unfold_time(x, window, stride, pad).unwrap();
                let expected = t_len.div_ceil(stride);
                assert_eq!(
                    tape.shape(out).unwrap()[0],
                    expected,
                    "t={t_len} window={window} stride={stride}"
                );
            }
        }
    }
}

#[test]
fn unfold_rejects_oversized_window() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![2, 1, 1]), false);
    assert!(matches!(
        tape.unfold_time(x, 7, 1, 1),
        Err(TensorError::BadWindow { .. })
    ));
}

#[test]
fn global_avg_pool_means_over_time_and_nodes() {
    let mut tape = Tape::new();
    // [t=2, v=2, c=2]: channel 0 holds 1,3,5,7; channel 1 holds 2,4,6,8.
    let x = tape.leaf(
        t(&[2, 2, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
        false,
    );
    let out = tape.global_avg_pool(x).unwrap();
    assert_eq!(tape.value(out).unwrap().data(), &[4.0, 5.0]);
}

#[test]
fn sum_and_mean_reduce_everything() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]), false);
    let s = tape.sum_all(x).unwrap();
    let m = tape.mean_all(x).unwrap();
    assert_eq!(tape.value(s).unwrap().item().unwrap(), 10.0);
    assert_eq!(tape.value(m).unwrap().item().unwrap(), 2.5);
    assert_eq!(tape.shape(s).unwrap(), &[] as &[usize]);
}

#[test]
fn softmax_rows_are_positive_and_sum_to_one() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[2, 3], &[1.0, 2.0, 3.0, -1000.0, 0.0, 1000.0]), false);
    let out = tape.softmax(x).unwrap();
    let y = tape.value(out).unwrap();
    for row in y.data().chunks_exact(3) {
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
    // The huge-logit row must not overflow thanks to max subtraction.
    assert!((y.data()[5] - 1.0).abs() < 1e-12);
}

#[test]
fn softmax_matches_direct_formula_on_moderate_values() {
    let mut tape = Tape::new();
    let logits = [0.3, -1.2, 2.0];
    let x = tape.leaf(t(&[1, 3], &logits), false);
    let out = tape.softmax(x).unwrap();
    let y = tape.value(out).unwrap();
    let z: f64 = logits.iter().map(|v| v.exp()).sum();
    for (got, logit) in y.data().iter().zip(&logits) {
        assert!((got - logit.exp() / z).abs() < 1e-12);
    }
}

#[test]
fn cross_entropy_of_uniform_logits_is_ln_class_count() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![3, 5]), false);
    let loss = tape.cross_entropy(x, &[0, 2, 4]).unwrap();
    let got = tape.value(loss).unwrap().item().unwrap();
    assert!((got - (5.0f64).ln()).abs() < 1e-12);
}

#[test]
fn cross_entropy_matches_negative_log_softmax() {
    let logits: [f64; 6] = [2.0, -1.0, 0.5, 0.0, 1.0, -2.0];
    let labels = [1usize, 0];
    let mut expected = 0.0;
    for (row, &label) in logits.chunks_exact(3).zip(&labels) {
        let z: f64 = row.iter().map(|v| v.exp()).sum();
        expected += -(row[label].exp() / z).ln();
    }
    expected /= 2.0;

    let mut tape = Tape::new();
    let x = tape.leaf(t(&[2, 3], &logits), false);
    let loss = tape.cross_entropy(x, &labels).unwrap();
    assert!((tape.value(loss).unwrap().item().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn cross_entropy_is_stable_for_huge_logits() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[1, 2], &[1e4, -1e4]), false);
    let loss = tape.cross_entropy(x, &[0]).unwrap();
    let got = tape.value(loss).unwrap().item().unwrap();
    assert!(got.is_finite());
    assert!(got.abs() < 1e-9);
}

#[test]
fn cross_entropy_label_errors() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![2, 3]), false);
    assert!(matches!(
        tape.cross_entropy(x, &[0]),
        Err(TensorError::LabelCountMismatch { labels: 1, rows: 2 })
    ));
    assert!(matches!(
        tape.cross_entropy(x, &[0, 3]),
        Err(TensorError::LabelOutOfRange {
            label: 3,
            classes: 3
        })
    ));
}

#[test]
fn stack_rows_concatenates_in_order() {
    let mut tape = Tape::new();
    let r0 = tape.leaf(t(&[2], &[1.0, 2.0]), false);
    let r1 = tape.leaf(t(&[2], &[3.0, 4.0]), false);
    let out = tape.stack_rows(&[r0, r1]).unwrap();
    let got = tape.value(out).unwrap();
    assert_eq!(got.shape(), &[2, 2]);
    assert_eq!(got.data(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn stack_rows_rejects_empty_and_ragged_input() {
    let mut tape = Tape::new();
    assert!(matches!(tape.stack_rows(&[]), Err(TensorError::EmptyStack)));
    let a = tape.leaf(Tensor::zeros(vec![2]), false);
    let b = tape.leaf(Tensor::zeros(vec![3]), false);
    assert!(matches!(
        tape.stack_rows(&[a, b]),
        Err(TensorError::ShapeMismatch {
            op: "stack_rows",
            ..
        })
    ));
}

#[test]
fn backward_of_simple_chain_matches_hand_derivative() {
    // loss = mean(relu(a*b + a)) over 4 elements.
    let mut tape = Tape::new();
    let a = tape.leaf(t(&[4], &[1.0, -2.0, 3.0, 0.5]), true);
    let b = tape.leaf(t(&[4], &[2.0, 1.0, -1.0, 4.0]), false);
    let prod = tape.mul(a, b).unwrap();
    let pre = tape.add(prod, a).unwrap();
    let act = tape.relu(pre).unwrap();
    let loss = tape.mean_all(act).unwrap();
    let grads = tape.backward(loss).unwrap();
    // pre = a*(b+1) = [3, -4, -6, 2.5]; relu passes elements 0 and 3.
    // d loss/d a_i = (b_i + 1)/4 where pre_i > 0, else 0.
    let expected = [3.0 / 4.0, 0.0, 0.0, 5.0 / 4.0];
    let got = grads.get(a).expect("gradient for a");
    for (g, e) in got.data().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-12);
    }
    assert!(grads.get(b).is_none(), "b does not require gradients");
}

#[test]
fn shared_subexpression_accumulates_both_paths() {
    // loss = sum(x*x + x) so dloss/dx = 2x + 1.
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[3], &[1.0, -2.0, 0.5]), true);
    let sq = tape.mul(x, x).unwrap();
    let both = tape.add(sq, x).unwrap();
    let loss = tape.sum_all(both).unwrap();
    let grads = tape.backward(loss).unwrap();
    let got = grads.get(x).unwrap();
    for (g, x_val) in got.data().iter().zip([1.0, -2.0, 0.5]) {
        assert!((g - (2.0 * x_val + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn backward_twice_errors() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(2.0).unwrap(), true);
    let loss = tape.mul(x, x).unwrap();
    tape.backward(loss).unwrap();
    assert!(matches!(
        tape.backward(loss),
        Err(TensorError::TapeConsumed)
    ));
}

#[test]
fn non_scalar_loss_errors() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(vec![2, 2]), true);
    let y = tape.relu(x).unwrap();
    assert!(matches!(
        tape.backward(y),
        Err(TensorError::NonScalarLoss(shape)) if shape == vec![2, 2]
    ));
}

#[test]
fn loss_without_grad_leaves_is_detached() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(1.0).unwrap(), false);
    let loss = tape.mul(x, x).unwrap();
    assert!(matches!(
        tape.backward(loss),
        Err(TensorError::DetachedGraph)
    ));
}

#[test]
fn refs_from_another_tape_are_rejected() {
    let mut tape_a = Tape::new();
    let mut tape_b = Tape::new();
    let a = tape_a.leaf(Tensor::scalar(1.0).unwrap(), true);
    let b = tape_b.leaf(Tensor::scalar(1.0).unwrap(), true);
    assert!(matches!(tape_a.add(a, b), Err(TensorError::ForeignTape)));
    assert!(matches!(tape_b.value(a), Err(TensorError::ForeignTape)));
    assert!(matches!(tape_b.backward(a), Err(TensorError::ForeignTape)));
}

#[test]
fn gradients_reject_foreign_refs() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(3.0).unwrap(), true);
    let loss = tape.mul(x, x).unwrap();
    let grads = tape.backward(loss).unwrap();
    let mut other = Tape::new();
    let y = other.leaf(Tensor::scalar(1.0).unwrap(), true);
    assert!(grads.get(y).is_none());
    assert!((grads.get(x).unwrap().item().unwrap() - 6.0).abs() < 1e-12);
}
