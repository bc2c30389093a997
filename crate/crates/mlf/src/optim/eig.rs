//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.

use crate::linalg::Mat;

/// Eigendecomposition `A = Q Λ Qᵀ` with eigenvalues sorted descending and the
/// matching eigenvectors as columns of `Q`.
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows;
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += a[(p, q)] * a[(p, q)];
            }
        }
    }
    acc.sqrt()
}

/// Diagonalizes a symmetric matrix. The input is symmetrized as `(A + Aᵀ)/2`
/// first; sweeps continue until the off-diagonal Frobenius mass drops below
/// `1e-12·‖A‖`.
pub fn sym_eig(a: &Mat) -> SymEig {
    assert_eq!(a.rows, a.cols, "sym_eig needs a square matrix");
    let n = a.rows;
    let mut a = a.clone();
    a.symmetrize();
    let norm = a.frobenius_norm();
    let tol = 1e-12 * norm;
    let mut q = Mat::identity(n);

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // rotate rows/columns p and r of A
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                // accumulate the rotation into Q
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(a[(src, src)]);
        // fix the sign so the largest-magnitude component is positive
        let mut pivot = 0;
        let mut best = 0.0;
        for k in 0..n {
            if q[(k, src)].abs() > best {
                best = q[(k, src)].abs();
                pivot = k;
            }
        }
        let flip = if q[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            eigenvectors[(k, col)] = flip * q[(k, src)];
        }
    }
    SymEig {
        eigenvalues,
        eigenvectors,
    }
}
