//! Small dense linear algebra over row-major `&[f64]` slices.
//!
//! The ambient dimension is dynamic but tiny (typically 1..=3), and the word
//! expansion composes millions of affine maps, so everything here works on
//! caller-owned flat buffers instead of a matrix type.

/// y = A·x for a row-major p×p matrix.
pub fn mat_vec(a: &[f64], x: &[f64], out: &mut [f64]) {
    let p = x.len();
    debug_assert_eq!(a.len(), p * p);
    for (i, o) in out.iter_mut().enumerate() {
        let row = &a[i * p..(i + 1) * p];
        *o = row.iter().zip(x).map(|(r, v)| r * v).sum();
    }
}

/// C = A·B for row-major p×p matrices.
pub fn mat_mul(a: &[f64], b: &[f64], out: &mut [f64]) {
    let p2 = a.len();
    let p = (p2 as f64).sqrt() as usize;
    debug_assert_eq!(p * p, p2);
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..p {
                acc += a[i * p + k] * b[k * p + j];
            }
            out[i * p + j] = acc;
        }
    }
}

/// Max entrywise deviation of AᵀA from the identity.
pub fn orthogonality_defect(a: &[f64], p: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..p {
                acc += a[k * p + i] * a[k * p + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    worst
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Solves a p×p system A·x = b by Gaussian elimination with partial pivoting.
/// Returns None when the matrix is numerically singular.
pub fn solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let p = b.len();
    debug_assert_eq!(a.len(), p * p);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&r1, &r2| {
                m[r1 * p + col]
                    .abs()
                    .partial_cmp(&m[r2 * p + col].abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot * p + col].abs() < 1e-14 {
            return None;
        }
        if pivot != col {
            for j in 0..p {
                m.swap(col * p + j, pivot * p + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[col * p + col];
        for row in (col + 1)..p {
            let factor = m[row * p + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..p {
                m[row * p + j] -= factor * m[col * p + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; p];
    for row in (0..p).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..p {
            acc -= m[row * p + j] * x[j];
        }
        x[row] = acc / m[row * p + row];
    }
    Some(x)
}
