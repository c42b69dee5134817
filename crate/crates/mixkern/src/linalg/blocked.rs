//! Recursive blocked kernels for lower-triangular factors.
//!
//! All routines operate in place on row-major storage addressed by a raw
//! pointer plus a row stride (`ld`). Off-diagonal block updates go through
//! `matrixmultiply::dgemm`; blocks at or below `LEAF` use plain loops whose
//! inner products run over contiguous row segments.
//!
//! Only the lower triangle of the input is ever read. Callers own the
//! buffers and guarantee that every `(ptr, n, ld)` triple addresses memory
//! inside a single allocation.

const LEAF: usize = 48;

#[inline]
fn split(n: usize) -> usize {
    // Keep the leading block a multiple of 8 so gemm panels stay aligned.
    (n / 2).div_ceil(8) * 8
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
unsafe fn row<'a>(a: *const f64, ld: usize, i: usize, len: usize) -> &'a [f64] {
    std::slice::from_raw_parts(a.add(i * ld), len)
}

#[inline]
unsafe fn row_mut<'a>(a: *mut f64, ld: usize, i: usize, len: usize) -> &'a mut [f64] {
    std::slice::from_raw_parts_mut(a.add(i * ld), len)
}

/// `c = beta * c + alpha * a * b` with explicit element strides.
#[allow(clippy::too_many_arguments)]
#[inline]
unsafe fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    (rsa, csa): (usize, usize),
    b: *const f64,
    (rsb, csb): (usize, usize),
    beta: f64,
    c: *mut f64,
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    matrixmultiply::dgemm(
        m,
        k,
        n,
        alpha,
        a,
        rsa as isize,
        csa as isize,
        b,
        rsb as isize,
        csb as isize,
        beta,
        c,
        rsc as isize,
        1,
    );
}

/// Cholesky factorization in place. On failure returns the global index of
/// the first nonpositive pivot (`offset` is added to local indices).
pub(crate) unsafe fn potrf(a: *mut f64, n: usize, ld: usize, offset: usize) -> Result<(), usize> {
    if n <= LEAF {
        return potrf_leaf(a, n, ld, offset);
    }
    let n1 = split(n);
    let n2 = n - n1;
    potrf(a, n1, ld, offset)?;
    let a21 = a.add(n1 * ld);
    trsm_right_lower_t(a, n1, a21, n2, ld);
    let a22 = a.add(n1 * ld + n1);
    gemm(n2, n1, n2, -1.0, a21, (ld, 1), a21, (1, ld), 1.0, a22, ld);
    potrf(a22, n2, ld, offset + n1)
}

unsafe fn potrf_leaf(a: *mut f64, n: usize, ld: usize, offset: usize) -> Result<(), usize> {
    for i in 0..n {
        for j in 0..=i {
            let s = dot(row(a, ld, i, j), row(a, ld, j, j));
            let v = *a.add(i * ld + j) - s;
            if i == j {
                if v <= 0.0 || !v.is_finite() {
                    return Err(offset + i);
                }
                *a.add(i * ld + i) = v.sqrt();
            } else {
                *a.add(i * ld + j) = v / *a.add(j * ld + j);
            }
        }
    }
    Ok(())
}

/// `x := x * l^{-T}` for lower-triangular `l` (n × n) and `x` (m × n).
unsafe fn trsm_right_lower_t(l: *const f64, n: usize, x: *mut f64, m: usize, ld: usize) {
    if n <= LEAF {
        for r in 0..m {
            for j in 0..n {
                let xr = row_mut(x, ld, r, n);
                let s = dot(&xr[..j], row(l, ld, j, j));
                xr[j] = (xr[j] - s) / *l.add(j * ld + j);
            }
        }
        return;
    }
    let n1 = split(n);
    let n2 = n - n1;
    trsm_right_lower_t(l, n1, x, m, ld);
    let b = l.add(n1 * ld);
    let x2 = x.add(n1);
    gemm(m, n1, n2, -1.0, x, (ld, 1), b, (1, ld), 1.0, x2, ld);
    trsm_right_lower_t(l.add(n1 * ld + n1), n2, x2, m, ld);
}

/// In-place inverse of a lower-triangular matrix.
pub(crate) unsafe fn trtri(a: *mut f64, n: usize, ld: usize) {
    if n <= LEAF {
        for j in 0..n {
            let djj = 1.0 / *a.add(j * ld + j);
            *a.add(j * ld + j) = djj;
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += *a.add(i * ld + k) * *a.add(k * ld + j);
                }
                *a.add(i * ld + j) = -s / *a.add(i * ld + i);
            }
        }
        return;
    }
    let n1 = split(n);
    let n2 = n - n1;
    let a21 = a.add(n1 * ld);
    let a22 = a.add(n1 * ld + n1);
    trtri(a, n1, ld);
    trmm_right_lower(a21, n2, a, n1, ld);
    trtri(a22, n2, ld);
    trmm_left_lower(a22, n2, a21, n1, ld);
    for i in 0..n2 {
        for v in row_mut(a21, ld, i, n1) {
            *v = -*v;
        }
    }
}

/// `b := b * t` for `b` (m × n) and lower-triangular `t` (n × n).
unsafe fn trmm_right_lower(b: *mut f64, m: usize, t: *const f64, n: usize, ld: usize) {
    if n <= LEAF {
        let mut acc = vec![0.0; n];
        for r in 0..m {
            acc.iter_mut().for_each(|v| *v = 0.0);
            let br = row_mut(b, ld, r, n);
            for (k, &bk) in br.iter().enumerate() {
                axpy(bk, row(t, ld, k, k + 1), &mut acc[..=k]);
            }
            br.copy_from_slice(&acc);
        }
        return;
    }
    let n1 = split(n);
    let n2 = n - n1;
    let b2 = b.add(n1);
    trmm_right_lower(b, m, t, n1, ld);
    gemm(
        m,
        n2,
        n1,
        1.0,
        b2,
        (ld, 1),
        t.add(n1 * ld),
        (ld, 1),
        1.0,
        b,
        ld,
    );
    trmm_right_lower(b2, m, t.add(n1 * ld + n1), n2, ld);
}

/// `b := t * b` for lower-triangular `t` (m × m) and `b` (m × n).
unsafe fn trmm_left_lower(t: *const f64, m: usize, b: *mut f64, n: usize, ld: usize) {
    if m <= LEAF {
        for i in (0..m).rev() {
            let tii = *t.add(i * ld + i);
            let bi = row_mut(b, ld, i, n);
            bi.iter_mut().for_each(|v| *v *= tii);
            for k in 0..i {
                axpy(*t.add(i * ld + k), row(b, ld, k, n), bi);
            }
        }
        return;
    }
    let m1 = split(m);
    let m2 = m - m1;
    let b2 = b.add(m1 * ld);
    trmm_left_lower(t.add(m1 * ld + m1), m2, b2, n, ld);
    gemm(
        m2,
        m1,
        n,
        1.0,
        t.add(m1 * ld),
        (ld, 1),
        b,
        (ld, 1),
        1.0,
        b2,
        ld,
    );
    trmm_left_lower(t, m1, b, n, ld);
}

/// `b := tᵀ * b` for lower-triangular `t` (m × m) and `b` (m × n).
unsafe fn trmm_left_lower_t(t: *const f64, m: usize, b: *mut f64, n: usize, ld: usize) {
    if m <= LEAF {
        for i in 0..m {
            let tii = *t.add(i * ld + i);
            let bi = row_mut(b, ld, i, n);
            bi.iter_mut().for_each(|v| *v *= tii);
            for k in i + 1..m {
                axpy(*t.add(k * ld + i), row(b, ld, k, n), bi);
            }
        }
        return;
    }
    let m1 = split(m);
    let m2 = m - m1;
    let b2 = b.add(m1 * ld);
    let q = t.add(m1 * ld);
    trmm_left_lower_t(t, m1, b, n, ld);
    gemm(m1, m2, n, 1.0, q, (1, ld), b2, (ld, 1), 1.0, b, ld);
    trmm_left_lower_t(t.add(m1 * ld + m1), m2, b2, n, ld);
}

/// `a := lᵀ l` for lower-triangular `l` stored in `a`; writes both triangles.
pub(crate) unsafe fn lauum(a: *mut f64, n: usize, ld: usize) {
    if n <= LEAF {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            l[i * n..i * n + i + 1].copy_from_slice(row(a, ld, i, i + 1));
        }
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in i..n {
                    s += l[k * n + i] * l[k * n + j];
                }
                *a.add(i * ld + j) = s;
                *a.add(j * ld + i) = s;
            }
        }
        return;
    }
    let n1 = split(n);
    let n2 = n - n1;
    let a21 = a.add(n1 * ld);
    let a22 = a.add(n1 * ld + n1);
    lauum(a, n1, ld);
    gemm(n1, n2, n1, 1.0, a21, (1, ld), a21, (ld, 1), 1.0, a, ld);
    trmm_left_lower_t(a22, n2, a21, n1, ld);
    lauum(a22, n2, ld);
    for i in 0..n2 {
        for j in 0..n1 {
            *a.add(j * ld + n1 + i) = *a21.add(i * ld + j);
        }
    }
}
