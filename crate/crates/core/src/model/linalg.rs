//! Dense row-major kernels over plain slices.

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `out = bias + W x` for `W` of shape `rows x cols`.
pub fn affine<T: Scalar>(w: &[T], bias: &[T], x: &[T], out: &mut [T]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, (row, &b)) in out.iter_mut().zip(w.chunks_exact(cols).zip(bias)) {
        *o = b + dot(row, x);
    }
}

/// `out += W x`.
pub fn matvec_acc<T: Scalar>(w: &[T], x: &[T], out: &mut [T]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `dx += W^T dy`.
pub fn matvec_t_acc<T: Scalar>(w: &[T], dy: &[T], dx: &mut [T]) {
    let cols = dx.len();
    for (row, &g) in w.chunks_exact(cols).zip(dy) {
        if g == T::zero() {
            continue;
        }
        for (d, &wv) in dx.iter_mut().zip(row) {
            *d += g * wv;
        }
    }
}

/// `dW += dy x^T`.
pub fn outer_acc<T: Scalar>(dw: &mut [T], dy: &[T], x: &[T]) {
    let cols = x.len();
    for (row, &g) in dw.chunks_exact_mut(cols).zip(dy) {
        if g == T::zero() {
            continue;
        }
        for (d, &xv) in row.iter_mut().zip(x) {
            *d += g * xv;
        }
    }
}

pub fn add_assign<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
