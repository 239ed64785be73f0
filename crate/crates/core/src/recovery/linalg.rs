use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::precision::{cdiv, Real};

/// Least-squares solution of a complex system by Householder QR with
/// column pivoting, carried out in the scalar type `T`.
pub struct QrSolution<T> {
    pub x: Vec<Complex<T>>,
    /// `‖A x − b‖₂`.
    pub residual: f64,
    /// `|r_11| / |r_nn|` of the pivoted factor.
    pub condition: f64,
}

fn cnorm<T: Real>(v: impl Iterator<Item = Complex<T>>) -> T {
    v.fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `a` is row-major `rows × cols` with `rows ≥ cols`.
pub fn qr_least_squares<T: Real>(
    mut a: Vec<Vec<Complex<T>>>,
    mut b: Vec<Complex<T>>,
) -> Result<QrSolution<T>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m < n || n == 0 || b.len() != m {
        return Err(Error::Precondition(format!("least squares needs rows >= cols > 0 (got {m}×{n})")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = Vec::with_capacity(n);
    for j in 0..n {
        // pivot: largest remaining column norm
        let (p, _) = (j..n)
            .map(|c| (c, cnorm((j..m).map(|r| a[r][c])).to_double()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != j {
            for row in a.iter_mut() {
                row.swap(j, p);
            }
            perm.swap(j, p);
        }
        let norm = cnorm((j..m).map(|r| a[r][j]));
        if norm.is_zero() {
            return Err(Error::IllConditioned { condition: f64::INFINITY });
        }
        let x0 = a[j][j];
        let x0_abs = x0.norm_sqr().sqrt();
        let phase = if x0_abs.is_zero() { Complex::new(T::one(), T::zero()) } else { x0 * x0_abs.reciprocal() };
        let alpha = -(phase * norm);
        // v = x − α e1, stored in place of column j
        let mut v: Vec<Complex<T>> = (j..m).map(|r| a[r][j]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if !vnorm2.is_zero() {
            let two = (T::one() + T::one()) * vnorm2.reciprocal();
            for c in (j + 1)..n {
                let dot = v.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (i, vi)| {
                    acc + vi.conj() * a[j + i][c]
                });
                let scale = dot * two;
                for (i, vi) in v.iter().enumerate() {
                    a[j + i][c] = a[j + i][c] - *vi * scale;
                }
            }
            let dot = v
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (i, vi)| acc + vi.conj() * b[j + i]);
            let scale = dot * two;
            for (i, vi) in v.iter().enumerate() {
                b[j + i] = b[j + i] - *vi * scale;
            }
        }
        a[j][j] = alpha;
        for row in a.iter_mut().skip(j + 1) {
            row[j] = Complex::new(T::zero(), T::zero());
        }
        diag.push(norm.to_double());
    }
    let condition = diag[0] / diag[n - 1];
    let mut y = vec![Complex::new(T::zero(), T::zero()); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for c in (i + 1)..n {
            acc = acc - a[i][c] * y[c];
        }
        y[i] = cdiv(acc, a[i][i]);
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for (i, &p) in perm.iter().enumerate() {
        x[p] = y[i];
    }
    let residual = cnorm(b[n..].iter().copied()).to_double();
    Ok(QrSolution { x, residual, condition })
}

/// `rows × cols` Toeplitz matrix `M[i][j] = s(first + i − j)`.
pub fn toeplitz(s: impl Fn(i64) -> Complex64, first: i64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |i, j| s(first + i as i64 - j as i64))
}

/// Roots of `z^L + c[1] z^{L−1} + … + c[L]` (with `c[0] = 1`) from the
/// eigenvalues of the companion matrix.
pub fn monic_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    if degree == 1 {
        return Ok(vec![-c[1] / c[0]]);
    }
    let mut comp = DMatrix::<Complex64>::zeros(degree, degree);
    for j in 0..degree {
        comp[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..degree {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let roots = comp
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("companion Schur form did not converge".into()))?;
    Ok(roots.iter().map(|&z| polish_root(c, z)).collect())
}

/// A couple of Newton steps on the original polynomial.
fn polish_root(c: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..2 {
        let (mut p, mut dp) = (Complex64::zero(), Complex64::zero());
        for &coef in c {
            dp = dp * z + p;
            p = p * z + coef;
        }
        if dp.norm() == 0.0 || !dp.norm().is_finite() {
            break;
        }
        let step = p / dp;
        if !step.norm().is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Sweep limit for the Jacobi iterations.
const JACOBI_SWEEPS: usize = 100;

/// Unitary `G` acting on columns `p, q` that diagonalizes the Hermitian
/// block `[[app, apq], [conj(apq), aqq]]` as `Gᴴ B G`. Returned as
/// `(G_pp, G_pq, G_qp, G_qq)`.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let mag = apq.norm();
    let phase = Complex64::from_polar(1.0, -apq.arg());
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 { 1.0 / (tau + tau.hypot(1.0)) } else { -1.0 / (-tau + tau.hypot(1.0)) };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    (Complex64::new(c, 0.0), Complex64::new(s, 0.0), phase * -s, phase * c)
}

fn rotate_columns(m: &mut DMatrix<Complex64>, p: usize, q: usize, g: (Complex64, Complex64, Complex64, Complex64)) {
    for k in 0..m.nrows() {
        let (x, y) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = x * g.0 + y * g.2;
        m[(k, q)] = x * g.1 + y * g.3;
    }
}

/// Permutes `vals` ascending and the columns of `vecs` to match.
fn sort_pairs(vals: Vec<f64>, vecs: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let cols = DMatrix::from_fn(vecs.nrows(), order.len(), |r, c| vecs[(r, order[c])]);
    (sorted, cols)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending, eigenvectors in the matching columns.
///
/// nalgebra's `symmetric_eigen` forms 2×2 deflated eigenvectors from
/// `λ − d`, which cancels when the off-diagonal is small and leaves
/// residuals near 1e-7.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    let mut a = m.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|ij| a[ij].norm_sqr()).sum();
        if off <= 1e-36 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].norm() == 0.0 {
                    continue;
                }
                let g = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, a[(p, q)]);
                rotate_columns(&mut a, p, q, g);
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g.0.conj() * x + g.2.conj() * y;
                    a[(q, k)] = g.1.conj() * x + g.3.conj() * y;
                }
                a[(p, q)] = Complex64::zero();
                a[(q, p)] = Complex64::zero();
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                rotate_columns(&mut v, p, q, g);
            }
        }
    }
    sort_pairs((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Singular values (ascending) and matching right singular vectors by
/// one-sided Jacobi. Wide inputs are padded with zero rows.
pub fn jacobi_svd(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.ncols();
    let mut u = if m.nrows() < n { m.clone().resize_vertically(n, Complex64::zero()) } else { m.clone() };
    let mut v = DMatrix::<Complex64>::identity(n, n);
    // columns below this squared norm are roundoff and left alone
    let floor = (1e-17 * u.norm()).powi(2);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dotc(&u.column(q));
                if alpha.min(beta) <= floor || gamma.norm() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut u, p, q, g);
                rotate_columns(&mut v, p, q, g);
            }
        }
        if !rotated {
            break;
        }
    }
    sort_pairs((0..n).map(|j| u.column(j).norm()).collect(), v)
}

/// Largest / smallest singular value of a complex matrix.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let (sv, _) = jacobi_svd(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::Extended;

    #[test]
    fn qr_solves_square_system() {
        let a = vec![
            vec![Complex64::new(2.0, 1.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, -1.0)],
        ];
        let x_true = [Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)];
        let b: Vec<_> = a.iter().map(|row| row[0] * x_true[0] + row[1] * x_true[1]).collect();
        let sol = qr_least_squares(a, b).unwrap();
        for (x, t) in sol.x.iter().zip(&x_true) {
            assert!((x - t).norm() < 1e-14);
        }
        assert!(sol.residual < 1e-14);
    }

    #[test]
    fn qr_overdetermined_matches_normal_equations() {
        // fit y = p + q t to 4 points; normal equations solved by hand
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 2.9, 5.2, 7.1];
        let a: Vec<Vec<Complex64>> = ts.iter().map(|&t| vec![Complex64::new(1.0, 0.0), Complex64::new(t, 0.0)]).collect();
        let b: Vec<Complex64> = ys.iter().map(|&y| Complex64::new(y, 0.0)).collect();
        let sol = qr_least_squares(a, b).unwrap();
        // slope = 2.06, intercept = 0.96
        assert!((sol.x[0].re - 0.96).abs() < 1e-12);
        assert!((sol.x[1].re - 2.06).abs() < 1e-12);
        assert!(sol.residual > 0.0);
    }

    #[test]
    fn qr_in_extended_precision() {
        let one = Complex::new(Extended::from(1.0), Extended::from(0.0));
        let eps = Complex::new(Extended::from(1e-20), Extended::from(0.0));
        let a = vec![vec![one, one], vec![one, one + eps]];
        let b = vec![one + one, one + one + eps];
        let sol = qr_least_squares(a, b).unwrap();
        for x in &sol.x {
            assert!((x.re - Extended::from(1.0)).to_double().abs() < 1e-10);
        }
        assert!(sol.condition > 1e19);
    }

    #[test]
    fn qr_rejects_zero_column() {
        let a = vec![vec![Complex64::new(1.0, 0.0), Complex64::zero()]; 3];
        let b = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(qr_least_squares(a, b), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn roots_of_known_polynomial() {
        // (z − 1)(z − j)(z + 2) = z^3 + (1 − j) z^2 + (−2 − j) z + 2j
        let c = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(-2.0, -1.0),
            Complex64::new(0.0, 2.0),
        ];
        let mut r = monic_roots(&c).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let expected = [Complex64::new(-2.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)];
        for (a, b) in r.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn toeplitz_layout() {
        let m = toeplitz(|k| Complex64::new(k as f64, 0.0), 2, 3, 2);
        assert_eq!(m[(0, 0)].re, 2.0);
        assert_eq!(m[(0, 1)].re, 1.0);
        assert_eq!(m[(2, 0)].re, 4.0);
    }

    fn random_hermitian(seed: u64, n: usize) -> DMatrix<Complex64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        &g + g.adjoint()
    }

    #[test]
    fn jacobi_eigen_matches_two_by_two_closed_form() {
        // small off-diagonal: the case nalgebra's symmetric_eigen gets wrong
        let (a, c, b) = (3.0, 1.0, Complex64::new(2e-9, -1e-9));
        let m = DMatrix::from_row_slice(2, 2, &[Complex64::new(a, 0.0), b, b.conj(), Complex64::new(c, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        let r = (((a - c) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        assert!((vals[0] - ((a + c) / 2.0 - r)).abs() < 1e-15);
        assert!((vals[1] - ((a + c) / 2.0 + r)).abs() < 1e-15);
        for i in 0..2 {
            let v = vecs.column(i);
            assert!((&m * v - v * Complex64::new(vals[i], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn jacobi_eigen_residuals_and_orthonormality() {
        for seed in 0..200 {
            let n = 2 + seed as usize % 9;
            let m = random_hermitian(seed, n);
            let (vals, vecs) = hermitian_eigen(&m);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&x| Complex64::new(x, 0.0))));
            assert!((&m * &vecs - &vecs * lam).norm() < 1e-13 * m.norm());
            assert!((vecs.adjoint() * &vecs - DMatrix::identity(n, n)).norm() < 1e-14);
        }
        let (vals, _) = hermitian_eigen(&DMatrix::<Complex64>::identity(4, 4));
        assert_eq!(vals, vec![1.0; 4]);
    }

    #[test]
    fn jacobi_svd_matches_gram_and_finds_null_vector() {
        for seed in 0..100 {
            let rows = 3 + seed as usize % 8;
            let cols = 2 + seed as usize % 5;
            let m = random_hermitian(seed, rows.max(cols)).columns(0, cols).rows(0, rows).into_owned();
            let (sv, v) = jacobi_svd(&m);
            assert!(sv.windows(2).all(|w| w[0] <= w[1]));
            let (gram, _) = hermitian_eigen(&(m.adjoint() * &m));
            for (s, g) in sv.iter().zip(&gram) {
                assert!((s * s - g).abs() < 1e-12 * gram[gram.len() - 1], "seed {seed}: {sv:?} vs {gram:?}");
            }
            assert!((v.adjoint() * &v - DMatrix::identity(cols, cols)).norm() < 1e-14);
        }
        // rank one: [1, 2]ᵀ[1, −1] has null vector (1, 1)/√2
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0].map(|x| Complex64::new(x, 0.0)));
        let (sv, v) = jacobi_svd(&m);
        assert!(sv[0] < 1e-15);
        let x = v.column(0);
        assert!((x[0] - x[1]).norm() < 1e-15);
    }
}
