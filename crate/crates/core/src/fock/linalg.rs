// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense-matrix kernel: Hermitian eigendecomposition, exp(-K), and the
//! directional (Fréchet) derivative of exp(-K) in K's eigenbasis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{c, cabs, Operator, Real};

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: Operator<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// Decomposes `a`, symmetrizing away rounding-level anti-Hermitian noise.
    pub fn new(a: &Operator<T>) -> Self {
        let sym = hermitian_part(a);
        let eig = SymmetricEigen::new(sym);
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(T) -> Complex<T>) -> Operator<T> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = f(self.values[j]);
            scaled.column_mut(j).scale_mut_complex(w);
        }
        &scaled * self.vectors.adjoint()
    }

    /// `V† A V`.
    pub fn to_eigenbasis(&self, a: &Operator<T>) -> Operator<T> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `V diag(f(i)) V†`, with the weight chosen by eigenvalue index.
    pub fn map_by_index(&self, f: impl Fn(usize) -> Complex<T>) -> Operator<T> {
        let mut scaled = self.vectors.clone();
        for j in 0..self.dim() {
            scaled.column_mut(j).scale_mut_complex(f(j));
        }
        &scaled * self.vectors.adjoint()
    }

    /// `V A V†`.
    pub fn from_eigenbasis(&self, a: &Operator<T>) -> Operator<T> {
        &self.vectors * a * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}

trait ScaleComplex<T: Real> {
    fn scale_mut_complex(&mut self, w: Complex<T>);
}

impl<T: Real, S> ScaleComplex<T> for nalgebra::Matrix<Complex<T>, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex<T>, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, w: Complex<T>) {
        for z in self.iter_mut() {
            *z *= w;
        }
    }
}

/// Divided difference of `x ↦ e^{-x}` at `(a, b)`, with the confluent limit
/// `-e^{-a}` when `a == b`. Uses `expm1` so nearly-equal arguments keep full
/// precision.
pub fn exp_neg_divided_difference<T: Real>(a: T, b: T) -> T {
    // (e^{-a} - e^{-b}) / (a - b) = e^{-lo} * expm1(-(hi - lo)) / (hi - lo), lo = min
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let delta = hi - lo;
    let base = (-lo).exp();
    if delta == T::zero() {
        -base
    } else {
        base * (-delta).exp_m1() / delta
    }
}

/// Same divided difference but expressed through normalized weights
/// `p = e^{-k}/Z`: returns `(p_a - p_b)/(k_a - k_b)` without forming `Z`.
pub fn weight_divided_difference<T: Real>(pa: T, ka: T, pb: T, kb: T) -> T {
    let (p_lo, lo, hi) = if ka <= kb { (pa, ka, kb) } else { (pb, kb, ka) };
    let delta = hi - lo;
    if delta == T::zero() {
        -p_lo
    } else {
        p_lo * (-delta).exp_m1() / delta
    }
}

/// Returns `(exp(-K), d/ds exp(-K - sD)|_{s=0})` for Hermitian `K`.
///
/// The derivative is assembled in K's eigenbasis: element (i,j) equals
/// `D̃_ij (e^{-k_i} - e^{-k_j})/(k_i - k_j)` with `D̃ = V† D V`.
pub fn expm_and_frechet<T: Real>(k: &Operator<T>, d: &Operator<T>) -> Result<(Operator<T>, Operator<T>)> {
    if k.nrows() != k.ncols() || d.shape() != k.shape() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: K is {:?}, D is {:?}",
            k.shape(),
            d.shape()
        )));
    }
    let scale = max_abs(k).max(T::one());
    let defect = hermiticity_defect(k);
    if defect > T::lit(1e-10) * scale {
        return Err(Error::InvalidArgument(format!(
            "exponent must be Hermitian (defect {:.3e})",
            defect.as_f64()
        )));
    }
    let eig = HermitianEigen::new(k);
    Ok(expm_and_frechet_with(&eig, d))
}

/// [`expm_and_frechet`] reusing an existing decomposition of `K`.
pub fn expm_and_frechet_with<T: Real>(eig: &HermitianEigen<T>, d: &Operator<T>) -> (Operator<T>, Operator<T>) {
    let n = eig.dim();
    let exp = eig.map(|x| c((-x).exp()));
    let mut dt = eig.to_eigenbasis(d);
    for i in 0..n {
        for j in 0..n {
            let w = exp_neg_divided_difference(eig.values[i], eig.values[j]);
            dt[(i, j)] *= c(w);
        }
    }
    (exp, eig.from_eigenbasis(&dt))
}

pub fn hermitian_part<T: Real>(a: &Operator<T>) -> Operator<T> {
    let half = c(T::lit(0.5));
    (a + a.adjoint()) * half
}

/// `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_defect<T: Real>(a: &Operator<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max(cabs(a[(i, j)] - a[(j, i)].conj()));
        }
    }
    worst
}

pub fn is_hermitian<T: Real>(a: &Operator<T>, tol: T) -> bool {
    hermiticity_defect(a) <= tol
}

pub fn max_abs<T: Real>(a: &Operator<T>) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
}

pub fn commutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    a * b - b * a
}

/// `Tr(A B)` in O(n²) without forming the product.
pub fn trace_product<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn trace<T: Real>(a: &Operator<T>) -> Complex<T> {
    a.diagonal()
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |s, z| s + z)
}

/// Real part of `Tr(A ρ)`; exact for Hermitian `A` and `ρ`.
pub fn expect<T: Real>(a: &Operator<T>, rho: &Operator<T>) -> T {
    trace_product(a, rho).re
}

/// Spectral norm (largest singular value).
pub fn operator_norm<T: Real>(a: &Operator<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    let ata = a.adjoint() * a;
    let eig = HermitianEigen::new(&ata);
    eig.values
        .iter()
        .copied()
        .fold(T::zero(), |m, x| m.max(x))
        .max(T::zero())
        .sqrt()
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_hermitian<T: Real>(a: &Operator<T>) -> T {
    HermitianEigen::new(a).values.iter().fold(T::zero(), |s, x| s + x.abs())
}

pub fn identity<T: Real>(n: usize) -> Operator<T> {
    DMatrix::identity(n, n)
}

pub fn to_complex<T: Real>(a: &DMatrix<T>) -> Operator<T> {
    a.map(c)
}

/// Moore–Penrose style solve of the symmetric positive semidefinite system
/// `G x = r`, discarding eigen-directions below `rel_cut * λ_max`.
/// Returns the solution and the number of discarded directions.
pub fn psd_solve<T: Real>(g: &DMatrix<T>, r: &DVector<T>, rel_cut: T) -> (DVector<T>, usize) {
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let cut = lmax * rel_cut;
    let coeffs = eig.eigenvectors.transpose() * r;
    let mut dropped = 0;
    let mut y = DVector::zeros(r.len());
    for i in 0..r.len() {
        let lam = eig.eigenvalues[i];
        if lam > cut && lam > T::zero() {
            y[i] = coeffs[i] / lam;
        } else {
            dropped += 1;
        }
    }
    (&eig.eigenvectors * y, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ci;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Operator<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| {
            ci(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&a + a.adjoint()) * c(0.5 * scale)
    }

    /// Scaling-and-squaring Taylor exponential, independent of the eigen path.
    fn taylor_expm(a: &Operator<f64>) -> Operator<f64> {
        let norm = max_abs(a) * a.nrows() as f64;
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a * c(0.5f64.powi(squarings));
        let n = a.nrows();
        let mut term = identity::<f64>(n);
        let mut sum = identity::<f64>(n);
        for k in 1..40 {
            term = &term * &scaled * c(1.0 / k as f64);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_exponent_gives_identity_and_minus_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DMatrix::from_fn(3, 3, |_, _| {
            ci(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let (e, de) = expm_and_frechet(&Operator::<f64>::zeros(3, 3), &d).unwrap();
        assert!(max_abs(&(e - identity(3))) < 1e-15);
        assert!(max_abs(&(de + &d)) < 1e-14);
    }

    #[test]
    fn degenerate_divided_difference() {
        let k = identity::<f64>(2);
        let (_, de) = expm_and_frechet(&k, &identity(2)).unwrap();
        let expected = identity::<f64>(2) * c(-(-1.0f64).exp());
        assert!(max_abs(&(de - expected)) < 1e-15);
    }

    #[test]
    fn frechet_matches_central_difference_of_taylor_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [4usize, 8] {
            for _ in 0..5 {
                let k = random_hermitian(n, &mut rng, 1.0);
                let d = random_hermitian(n, &mut rng, 1.0);
                let (e, de) = expm_and_frechet(&k, &d).unwrap();
                assert!(max_abs(&(e - taylor_expm(&(-&k)))) < 1e-12);
                let h = 1e-5;
                let plus = taylor_expm(&(-(&k + &d * c(h))));
                let minus = taylor_expm(&(-(&k - &d * c(h))));
                let fd = (plus - minus) * c(1.0 / (2.0 * h));
                assert!(max_abs(&(de - fd)) < 1e-7, "n={n}");
            }
        }
    }

    #[test]
    fn non_hermitian_exponent_rejected() {
        let mut k = Operator::<f64>::zeros(2, 2);
        k[(0, 1)] = c(1.0);
        assert!(matches!(expm_and_frechet(&k, &k), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn divided_difference_is_continuous_at_coincidence() {
        let a = 0.3f64;
        let near = exp_neg_divided_difference(a, a + 1e-13);
        assert!((near - exp_neg_divided_difference(a, a)).abs() < 1e-12);
        let far = exp_neg_divided_difference(0.1f64, 2.0);
        assert!((far - ((-0.1f64).exp() - (-2.0f64).exp()) / (0.1 - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn psd_solve_handles_rank_deficiency() {
        let g = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = DVector::from_vec(vec![2.0, 2.0]);
        let (x, dropped) = psd_solve(&g, &r, 1e-12);
        assert_eq!(dropped, 1);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let k = identity::<f32>(2) * c(0.5f32);
        let (e, _) = expm_and_frechet(&k, &identity(2)).unwrap();
        assert!((e[(0, 0)].re - (-0.5f32).exp()).abs() < 1e-6);
    }
}
