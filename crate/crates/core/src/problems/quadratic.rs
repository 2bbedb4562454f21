use nalgebra::SymmetricEigen;

use super::Objective;
use crate::error::{check_dim, invalid, Result};
use crate::{Matrix, Vector};

/// `f(x) = ½xᵀMx + bᵀx` with symmetric positive semidefinite `M`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    m: Matrix,
    b: Vector,
    l_s: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

pub fn quadratic_objective(m: Matrix, b: Vector) -> Result<Quadratic> {
    if !m.is_square() {
        return Err(invalid(format!("M must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    check_dim(m.nrows(), b.len())?;
    if m.nrows() == 0 {
        return Err(invalid("empty quadratic"));
    }
    let scale = m.amax().max(1.0);
    if (&m - m.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(invalid("M is not symmetric"));
    }
    let eig = SymmetricEigen::new(m.clone());
    let lmin = eig.eigenvalues.min();
    if lmin < -PSD_TOL * scale {
        return Err(invalid(format!("M is not positive semidefinite (eigenvalue {lmin:e})")));
    }
    let l_s = eig.eigenvalues.max().max(0.0);
    Ok(Quadratic { m, b, l_s })
}

impl Quadratic {
    pub fn matrix(&self) -> &Matrix {
        &self.m
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.m * x)) + self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.m * x + &self.b
    }

    fn smoothness_constant(&self) -> Option<f64> {
        Some(self.l_s)
    }

    fn hessian(&self) -> Option<&Matrix> {
        Some(&self.m)
    }

    fn linear_term(&self) -> Option<&Vector> {
        Some(&self.b)
    }
}

/// Least-squares solution of `Mx = −b`; `None` if the SVD fails.
pub(crate) fn solve_stationary(m: &Matrix, b: &Vector) -> Option<Vector> {
    let svd = m.clone().svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(&(-b), eps).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_diff_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(d: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(d))
    }

    #[test]
    fn identity_value_and_gradient() {
        let q = quadratic_objective(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert_eq!(q.value(&x), 12.5);
        assert_eq!(q.gradient(&x), x);
        assert_eq!(q.smoothness_constant(), Some(1.0));
    }

    #[test]
    fn diagonal_gradient() {
        let q = quadratic_objective(diag(&[1.0, 4.0]), Vector::zeros(2)).unwrap();
        let g = q.gradient(&Vector::from_vec(vec![1.0, 1.0]));
        assert_eq!(g.as_slice(), &[1.0, 4.0]);
        assert_eq!(q.smoothness_constant(), Some(4.0));
    }

    #[test]
    fn random_psd_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let m = a.transpose() * &a;
        let b = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let q = quadratic_objective(m, b).unwrap();
        for _ in 0..20 {
            let x = Vector::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
            let fd = finite_diff_gradient(&q, &x, 1e-5).unwrap();
            let g = q.gradient(&x);
            assert!((fd - &g).norm() <= 1e-6 * g.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_non_symmetric_and_indefinite() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(quadratic_objective(m, Vector::zeros(2)).is_err());
        assert!(quadratic_objective(diag(&[1.0, -1.0]), Vector::zeros(2)).is_err());
        assert!(quadratic_objective(diag(&[1.0, 1.0]), Vector::zeros(3)).is_err());
    }

    #[test]
    fn singular_quadratic_stationary_point() {
        let m = diag(&[2.0, 0.0]);
        let b = Vector::from_vec(vec![-4.0, 0.0]);
        let x = solve_stationary(&m, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert_eq!(x[1], 0.0);
    }
}
