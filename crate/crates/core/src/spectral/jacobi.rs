//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Each rotation annihilates one off-diagonal pair (p, q); sweeps visit the
//! pairs row by row in a fixed order, so the output is bitwise reproducible.
//! Iteration stops once the off-diagonal Frobenius norm drops to
//! `OFF_DIAGONAL_RTOL · ‖A‖_F`.

/// Relative off-diagonal Frobenius threshold.
pub const OFF_DIAGONAL_RTOL: f64 = 1e-12;

/// Maximum number of full sweeps.
pub const MAX_SWEEPS: usize = 100;

pub(crate) struct Diagonalization {
    /// Diagonal of the rotated matrix, in original index order.
    pub values: Vec<f64>,
    /// Row-major n×n accumulated rotations; column j pairs with `values[j]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

/// Error payload: the off-diagonal norm left when the sweep cap was hit.
pub(crate) struct NotConverged {
    pub sweeps: usize,
    pub residual: f64,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes the row-major symmetric matrix `a` in place.
pub(crate) fn diagonalize(mut a: Vec<f64>, n: usize) -> Result<Diagonalization, NotConverged> {
    let frobenius = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_RTOL * frobenius;
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(NotConverged {
                sweeps,
                residual: off,
            });
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        sweeps += 1;
    }

    Ok(Diagonalization {
        values: (0..n).map(|i| a[i * n + i]).collect(),
        vectors: v,
        sweeps,
    })
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[k * n + p] = new_kp;
        a[p * n + k] = new_kp;
        a[k * n + q] = new_kq;
        a[q * n + k] = new_kq;
    }
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}
