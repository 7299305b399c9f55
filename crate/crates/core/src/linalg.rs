//! Small dense complex-Hermitian eigenproblems.
//!
//! Everything downstream needs only 4×4 matrices (two-qubit density
//! matrices), so a cyclic Jacobi sweep is simpler and sturdier than pulling
//! in a LAPACK binding.

use num_complex::Complex64 as C64;

pub type CMat4 = [[C64; 4]; 4];

pub fn zero4() -> CMat4 {
    [[C64::new(0.0, 0.0); 4]; 4]
}

pub fn matmul(a: &CMat4, b: &CMat4) -> CMat4 {
    let mut out = zero4();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &CMat4) -> CMat4 {
    let mut out = zero4();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn trace(a: &CMat4) -> C64 {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

/// Largest |a_ij − a_ji*| over the matrix: 0 for exactly Hermitian input.
pub fn hermiticity_defect(a: &CMat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian 4×4 by
/// cyclic complex Jacobi rotations.
pub fn hermitian_eigen(a: &CMat4) -> ([f64; 4], CMat4) {
    let mut m = *a;
    // enforce exact Hermiticity so rotations stay unitary
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = (m[i][j] + m[j][i].conj()) * 0.5;
            m[i][j] = avg;
            m[j][i] = avg.conj();
        }
        m[i][i] = C64::new(m[i][i].re, 0.0);
    }
    let mut vecs = zero4();
    for (i, row) in vecs.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }

    let scale: f64 = (0..4).map(|i| m[i][i].norm()).fold(1e-300, f64::max);
    for _sweep in 0..64 {
        let off: f64 = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j].norm_sqr())
            .sum();
        if off.sqrt() < 1e-15 * scale.max(1.0) {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = m[p][q];
                if apq.norm() < 1e-300 {
                    continue;
                }
                // unitary 2x2 rotation annihilating m[p][q]
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(m[p][p].re - m[q][q].re);
                let (s, c) = theta.sin_cos();
                let cp = phase * s;
                // acts as [[c, cp.conj()], [-cp, c]] on columns (p, q)
                for k in 0..4 {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = mkp * c + mkq * cp.conj();
                    m[k][q] = -mkp * cp + mkq * c;
                }
                for k in 0..4 {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = mpk * c + mqk * cp;
                    m[q][k] = -mpk * cp.conj() + mqk * c;
                }
                for k in 0..4 {
                    let (vkp, vkq) = (vecs[k][p], vecs[k][q]);
                    vecs[k][p] = vkp * c + vkq * cp.conj();
                    vecs[k][q] = -vkp * cp + vkq * c;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    let evals_raw: Vec<f64> = (0..4).map(|i| m[i][i].re).collect();
    order.sort_by(|&i, &j| evals_raw[i].partial_cmp(&evals_raw[j]).unwrap());
    let mut evals = [0.0f64; 4];
    let mut sorted_vecs = zero4();
    for (slot, &idx) in order.iter().enumerate() {
        evals[slot] = evals_raw[idx];
        for k in 0..4 {
            sorted_vecs[k][slot] = vecs[k][idx];
        }
    }
    (evals, sorted_vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat4) -> f64 {
    hermitian_eigen(a).0[0]
}

/// Hermitian square root via eigendecomposition, clamping tiny negative
/// eigenvalues to zero.
pub fn sqrt_psd(a: &CMat4) -> CMat4 {
    let (evals, vecs) = hermitian_eigen(a);
    let mut out = zero4();
    for (k, ev) in evals.iter().enumerate() {
        let root = ev.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += vecs[i][k] * vecs[j][k].conj() * root;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix_is_its_own_answer() {
        let mut a = zero4();
        for (i, v) in [3.0, -1.0, 2.0, 0.5].iter().enumerate() {
            a[i][i] = c(*v, 0.0);
        }
        let (evals, _) = hermitian_eigen(&a);
        assert_eq!(evals, [-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a: CMat4 = [
            [c(1.0, 0.0), c(0.2, 0.3), c(0.0, -0.1), c(0.5, 0.0)],
            [c(0.2, -0.3), c(2.0, 0.0), c(0.4, 0.0), c(0.0, 0.2)],
            [c(0.0, 0.1), c(0.4, 0.0), c(0.5, 0.0), c(-0.3, 0.1)],
            [c(0.5, 0.0), c(0.0, -0.2), c(-0.3, -0.1), c(1.5, 0.0)],
        ];
        let (evals, vecs) = hermitian_eigen(&a);
        let mut rebuilt = zero4();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    rebuilt[i][j] += vecs[i][k] * vecs[j][k].conj() * evals[k];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(rebuilt[i][j].re, a[i][j].re, epsilon = 1e-12);
                assert_abs_diff_eq!(rebuilt[i][j].im, a[i][j].im, epsilon = 1e-12);
            }
        }
        let tr: f64 = evals.iter().sum();
        assert_abs_diff_eq!(tr, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let a: CMat4 = [
            [c(0.5, 0.0), c(0.1, 0.05), c(0.0, 0.0), c(0.2, 0.0)],
            [c(0.1, -0.05), c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.05, 0.0), c(0.0, 0.0)],
            [c(0.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)],
        ];
        let psd = matmul(&a, &adjoint(&a));
        let root = sqrt_psd(&psd);
        let sq = matmul(&root, &root);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(sq[i][j].re, psd[i][j].re, epsilon = 1e-12);
                assert_abs_diff_eq!(sq[i][j].im, psd[i][j].im, epsilon = 1e-12);
            }
        }
    }
}
