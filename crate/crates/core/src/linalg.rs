//! Small dense helpers.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

fn norm1(a: &Array2<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Intended for the small gate generators used by the MPO engine; the scaled
/// matrix has 1-norm below 1/2, where 20 Taylor terms are exact to double
/// precision.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=20 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
        if norm1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_rotation_generator() {
        let theta = 7.3;
        let mut a = Array2::<C64>::zeros((2, 2));
        a[[0, 1]] = C64::new(-theta, 0.0);
        a[[1, 0]] = C64::new(theta, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-13);
        assert!((e[[1, 0]].re - theta.sin()).abs() < 1e-13);
    }

    #[test]
    fn exponential_of_diagonal() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[[0, 0]] = C64::new(-3.0, 1.0);
        a[[1, 1]] = C64::new(0.5, 0.0);
        a[[2, 2]] = C64::new(0.0, -2.0);
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[[i, i]] - a[[i, i]].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn kron_shapes() {
        let a = Array2::<C64>::eye(2);
        let b = Array2::from_elem((3, 1), C64::new(2.0, 0.0));
        let k = kron(&a, &b);
        assert_eq!(k.dim(), (6, 2));
        assert_eq!(k[[4, 1]], C64::new(2.0, 0.0));
        assert_eq!(k[[4, 0]], C64::new(0.0, 0.0));
    }
}
