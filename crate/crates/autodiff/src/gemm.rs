//! Row-major matrix multiply on top of `matrixmultiply::dgemm`.

/// `out = alpha * op(a) * op(b) + beta * out` where `op(a)` is `m x k` and
/// `op(b)` is `k x n`, all row-major. A transposed operand is passed in its
/// stored (untransposed) layout; transposition happens via strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    out: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    let (rsa, csa) = if a_trans {
        (1, m as isize)
    } else {
        (k as isize, 1)
    };
    let (rsb, csb) = if b_trans {
        (1, k as isize)
    } else {
        (n as isize, 1)
    };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Reorders a `[bt, r, n]` tensor to `[r, bt * n]` so one shared left matrix
/// can multiply every batch entry in a single call.
pub(crate) fn fold_batch(data: &[f64], bt: usize, r: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(data.len(), bt * r * n);
    let mut folded = vec![0.0; data.len()];
    for t in 0..bt {
        for row in 0..r {
            let src = (t * r + row) * n;
            let dst = row * bt * n + t * n;
            folded[dst..dst + n].copy_from_slice(&data[src..src + n]);
        }
    }
    folded
}

/// Inverse of [`fold_batch`]: adds a `[r, bt * n]` matrix back into a
/// `[bt, r, n]` tensor.
pub(crate) fn unfold_batch_add(folded: &[f64], bt: usize, r: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(folded.len(), bt * r * n);
    debug_assert_eq!(out.len(), bt * r * n);
    for t in 0..bt {
        for row in 0..r {
            let src = row * bt * n + t * n;
            let dst = (t * r + row) * n;
            for (o, f) in out[dst..dst + n].iter_mut().zip(&folded[src..src + n]) {
                *o += f;
            }
        }
    }
}
