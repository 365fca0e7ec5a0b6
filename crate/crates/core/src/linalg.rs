//! Dense complex linear algebra used throughout the crate.
//!
//! Everything is built on `nalgebra` dynamic matrices. The routines here are
//! the handful of kernels the optimizers lean on: Hermitian eigendecomposition
//! with sorted spectra, the dominant eigenpair of a rank-one update of an
//! already diagonalized matrix, and the top singular pair of a reshaped state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Kronecker product `a ⊗ b` with `a` as the most significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// `Re ⟨ψ|M|ψ⟩`.
pub fn expect(m: &CMatrix, psi: &CVector) -> f64 {
    let mpsi = m * psi;
    psi.dotc(&mpsi).re
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        // Entries far below the scale of the matrix can turn the QR sweeps
        // into NaN; dropping them perturbs the spectrum by at most 1e-40·n.
        let cut = m.iter().map(|c| c.norm()).fold(0.0, f64::max) * 1e-40;
        let flush = |x: f64| if x.abs() > cut { x } else { 0.0 };
        let eig = SymmetricEigen::new(m.map(|c| C64::new(flush(c.re), flush(c.im))));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// Dominant eigenpair of `M + |φ⟩⟨φ|` where `M` is the matrix this
    /// decomposition was built from and `φ` is a unit vector.
    ///
    /// Solves the secular equation `Σ_i |v_i|² / (μ - λ_i) = 1` with
    /// `v = U†φ`; the root lies in `[λ_max, λ_max + 1]`.
    pub fn dominant_of_rank_one_update(&self, phi: &CVector) -> (f64, CVector) {
        let u = &self.vectors;
        let v = u.ad_mul(phi);
        let lmax = self.max_value();
        let gaps: Vec<f64> = self.values.iter().map(|l| (lmax - l).max(0.0)).collect();
        let weights: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
        let h = |delta: f64| -> f64 {
            gaps.iter()
                .zip(&weights)
                .map(|(g, w)| w / (delta + g))
                .sum()
        };

        const FLOOR: f64 = 1e-300;
        if h(FLOOR) <= 1.0 {
            // φ has no weight on the top eigenspace and cannot lift it.
            let n = self.values.len();
            let col = u.column(n - 1).into_owned();
            return (lmax, col);
        }
        let (mut lo, mut hi) = (FLOOR, 1.0_f64);
        for _ in 0..80 {
            let mid = (lo * hi).sqrt();
            if h(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut delta = (lo * hi).sqrt();
        // Newton polish on 1 - 1/h, which is close to linear near the root.
        for _ in 0..3 {
            let hv = h(delta);
            let dh: f64 = -gaps
                .iter()
                .zip(&weights)
                .map(|(g, w)| w / ((delta + g) * (delta + g)))
                .sum::<f64>();
            let f = 1.0 - 1.0 / hv;
            let df = dh / (hv * hv);
            if df == 0.0 {
                break;
            }
            let next = delta - f / df;
            if next > lo * 0.5 && next < hi * 2.0 && next > 0.0 {
                delta = next;
            }
        }
        let y = CVector::from_iterator(
            v.len(),
            // Scaled by δ so top-eigenspace components stay O(1) for tiny δ.
            v.iter().zip(&gaps).map(|(vi, g)| vi * (delta / (delta + g))),
        );
        let norm = y.norm();
        let psi = u * (y / C64::new(norm, 0.0));
        (lmax + delta, psi)
    }
}

/// Top singular triple `(σ, u, v)` with `M v = σ u`, computed through the
/// Gram matrix of the smaller side.
pub fn top_singular_pair(m: &CMatrix) -> (f64, CVector, CVector) {
    let (rows, cols) = m.shape();
    if rows <= cols {
        let gram = m * m.adjoint();
        let eig = HermitianEigen::new(&gram);
        let s2 = eig.max_value().max(0.0);
        let u = eig.vectors.column(rows - 1).into_owned();
        let mut v = m.ad_mul(&u);
        let nv = v.norm();
        if nv > 0.0 {
            v /= C64::new(nv, 0.0);
        } else {
            v = basis_vector(cols, 0);
        }
        (s2.sqrt(), u, v)
    } else {
        let (s, v, u) = top_singular_pair(&m.adjoint());
        (s, u, v)
    }
}

/// Largest squared singular value only.
pub fn top_singular_value_sq(m: &CMatrix) -> f64 {
    let (rows, cols) = m.shape();
    let gram = if rows <= cols {
        m * m.adjoint()
    } else {
        m.ad_mul(m)
    };
    HermitianEigen::new(&gram).max_value().max(0.0)
}

/// All singular values in descending order.
pub fn singular_values_desc(m: &CMatrix) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

/// Unit vector drawn from the unitarily invariant distribution.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / C64::new(norm, 0.0);
        }
    }
}

pub fn normalize(v: &CVector) -> CVector {
    let n = v.norm();
    v / C64::new(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(&mut rng, 7);
        let eig = HermitianEigen::new(&m);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            7,
            eig.values.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let back = &eig.vectors * diag * eig.vectors.adjoint();
        assert!((back - m).norm() < 1e-10);
    }

    #[test]
    fn rank_one_update_matches_direct_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 5, 9] {
            let m = random_hermitian(&mut rng, n);
            let phi = random_unit_vector(&mut rng, n);
            let eig = HermitianEigen::new(&m);
            let (mu, psi) = eig.dominant_of_rank_one_update(&phi);
            let full = &m + &phi * phi.adjoint();
            let direct = HermitianEigen::new(&full);
            assert!((mu - direct.max_value()).abs() < 1e-10, "{mu} vs {}", direct.max_value());
            let residual = &full * &psi - &psi * C64::new(mu, 0.0);
            assert!(residual.norm() < 1e-8);
        }
    }

    #[test]
    fn rank_one_update_with_degenerate_top_space() {
        // M = diag(1, 1, 0): φ orthogonal to the top space cannot lift it above 1
        // when its weight on the bottom level is small enough.
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ZERO]));
        let eig = HermitianEigen::new(&m);
        let phi = basis_vector(3, 2);
        let (mu, _) = eig.dominant_of_rank_one_update(&phi);
        assert!((mu - 1.0).abs() < 1e-12);

        let phi = normalize(&CVector::from_vec(vec![ONE, ZERO, ONE]));
        let (mu, psi) = eig.dominant_of_rank_one_update(&phi);
        let full = &m + &phi * phi.adjoint();
        assert!((mu - HermitianEigen::new(&full).max_value()).abs() < 1e-10);
        assert!((&full * &psi - &psi * C64::new(mu, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn top_singular_pair_agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (r, c) in [(2, 8), (8, 2), (4, 4)] {
            let m = CMatrix::from_fn(r, c, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let (s, u, v) = top_singular_pair(&m);
            let all = singular_values_desc(&m);
            assert!((s - all[0]).abs() < 1e-10);
            assert!((&m * &v - &u * C64::new(s, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn badly_scaled_gram_stays_finite() {
        // Amplitudes spanning ~200 orders of magnitude, seen in embedded-qudit runs.
        let a = [
            0.6825546263646389, 0.19896137181743315, 2.2555722945405323e-129, 1.6230496961841625e-129,
            1.5213030113993076e-129, 0.19896137181743295, 0.6744982780387794, 2.2098685868410278e-129,
            1.590162526450913e-129, 1.4904774917191536e-129, 8.10467510098471e-67, 7.940453496245458e-67,
            7.695060622507502e-195, 5.537160496123073e-195, 5.1900437535324275e-195, 9.544040728180199e-67,
            9.350653866332013e-67, 9.061679965197387e-195, 6.520543345043927e-195, 6.111779725597189e-195,
            1.1395574665719509e-66, 1.1164670954563578e-66, 1.0819636418289989e-194, 7.785521946706597e-195,
            7.297458611825665e-195,
        ];
        let m = CMatrix::from_fn(5, 5, |i, j| C64::new(a[5 * i + j], 0.0));
        let eig = HermitianEigen::new(&(&m * m.adjoint()));
        assert!(eig.values.iter().all(|v| v.is_finite()));
        assert!(eig.vectors.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let (s, u, v) = top_singular_pair(&m);
        assert!((&m * &v - &u * C64::new(s, 0.0)).norm() < 1e-10);
    }
}
