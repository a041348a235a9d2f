//! Minimal dense linear algebra for the small systems in this crate:
//! Householder least squares (basis fits) and Jacobi eigenvalues of symmetric
//! matrices up to 8x8 (Schouten endomorphism spectra).

/// Least squares min ||A x - b|| via Householder QR. A is row-major m x n,
/// m >= n. Returns (x, residual_norm).
pub fn lstsq(a: &[f64], m: usize, n: usize, b: &[f64]) -> (Vec<f64>, f64) {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    assert!(m >= n);
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm = 0.0;
        for i in k..m {
            norm += r[i * n + k] * r[i * n + k];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k * n + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        for i in k..m {
            v[i] = r[i * n + k];
        }
        v[k] -= alpha;
        let vtv: f64 = v[k..].iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        // Apply H = I - 2 v v^T / (v^T v) to R and y.
        for j in k..n {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i] * r[i * n + j];
            }
            let s = 2.0 * dot / vtv;
            for i in k..m {
                r[i * n + j] -= s * v[i];
            }
        }
        let mut dot = 0.0;
        for i in k..m {
            dot += v[i] * y[i];
        }
        let s = 2.0 * dot / vtv;
        for i in k..m {
            y[i] -= s * v[i];
        }
    }
    // Back substitution on the upper-triangular part.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = y[k];
        for j in k + 1..n {
            acc -= r[k * n + j] * x[j];
        }
        let d = r[k * n + k];
        x[k] = if d.abs() > 1e-300 { acc / d } else { 0.0 };
    }
    let residual: f64 = y[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (x, residual)
}

/// Eigenvalues of a symmetric matrix (row-major n x n) by cyclic Jacobi
/// rotations. Returns eigenvalues sorted ascending.
pub fn symmetric_eigenvalues(mat: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(mat.len(), n * n);
    let mut a = mat.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Elementary symmetric polynomials e_1..e_n of the given values, computed by
/// the product recurrence prod (1 + lambda_i t).
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &lam) in values.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += lam * e[k - 1];
        }
    }
    e.remove(0);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_solution() {
        // Overdetermined system with exact solution x = (2, -3).
        let m = 5;
        let a: Vec<f64> = (0..m)
            .flat_map(|i| vec![1.0, i as f64])
            .collect();
        let b: Vec<f64> = (0..m).map(|i| 2.0 - 3.0 * i as f64).collect();
        let (x, res) = lstsq(&a, m, 2, &b);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 3.0).abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn jacobi_diagonal_plus_rotation() {
        // Symmetric matrix with known spectrum {1, 3}.
        let a = [2.0, 1.0, 1.0, 2.0];
        let eig = symmetric_eigenvalues(&a, 2);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn elementary_symmetric_small() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(e.len(), 3);
        assert!((e[0] - 6.0).abs() < 1e-14);
        assert!((e[1] - 11.0).abs() < 1e-14);
        assert!((e[2] - 6.0).abs() < 1e-14);
    }
}
