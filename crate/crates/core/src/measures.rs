//! Pure-state entanglement measures.
//!
//! * the generalized geometric measure `E_GGM(ψ) = 1 - max_cut λ_max²`, exact
//!   via one SVD per bipartition;
//! * the geometric measure `E_G(ψ) = 1 - max |⟨a b c …|ψ⟩|²`, estimated by
//!   alternating least squares (a rank-1 tensor approximation) with restarts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::observables::{HilbertStructure, PureState};

/// Ties between bipartitions closer than this keep the lower index.
const TIE_TOL: f64 = 1e-12;

/// Seed stream for restart `index` of a run seeded with `seed`.
pub(crate) fn restart_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Split of the parties into two nonempty groups. Canonical form keeps
/// party 0 in `side_a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    side_a: Vec<usize>,
    side_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(parties: usize, side: &[usize]) -> Result<Self> {
        let mut in_a = vec![false; parties];
        for &p in side {
            if p >= parties {
                return Err(Error::InvalidBipartition(format!(
                    "party {p} out of range for {parties} parties"
                )));
            }
            if in_a[p] {
                return Err(Error::InvalidBipartition(format!("party {p} listed twice")));
            }
            in_a[p] = true;
        }
        let a: Vec<usize> = (0..parties).filter(|&p| in_a[p]).collect();
        let b: Vec<usize> = (0..parties).filter(|&p| !in_a[p]).collect();
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidBipartition(format!(
                "{side:?} is not a proper nonempty subset of {parties} parties"
            )));
        }
        let (side_a, side_b) = if in_a[0] { (a, b) } else { (b, a) };
        Ok(Self { side_a, side_b })
    }

    /// All `2^{N-1} - 1` canonical bipartitions. Index order follows the
    /// bitmask of parties `1..N` that join party 0.
    pub fn all(parties: usize) -> Vec<Bipartition> {
        if parties < 2 {
            return Vec::new();
        }
        let full = (1usize << (parties - 1)) - 1;
        (0..full)
            .map(|mask| {
                let mut side = vec![0];
                side.extend((1..parties).filter(|p| mask >> (p - 1) & 1 == 1));
                Bipartition::new(parties, &side).expect("canonical mask")
            })
            .collect()
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[usize] {
        &self.side_b
    }

    pub fn parties(&self) -> usize {
        self.side_a.len() + self.side_b.len()
    }
}

/// Index map from flat amplitudes to the `(side_a, side_b)` matrix of a cut.
/// Parties inside each side keep ascending order.
#[derive(Debug, Clone)]
pub(crate) struct CutLayout {
    pub rows: usize,
    pub cols: usize,
    row_of: Vec<usize>,
    col_of: Vec<usize>,
}

impl CutLayout {
    pub fn new(structure: &HilbertStructure, cut: &Bipartition) -> Self {
        let dims = structure.local_dims();
        let sub_strides = |side: &[usize]| -> (usize, Vec<usize>) {
            let mut strides = vec![0; side.len()];
            let mut acc = 1;
            for (slot, &p) in side.iter().enumerate().rev() {
                strides[slot] = acc;
                acc *= dims[p];
            }
            (acc, strides)
        };
        let (rows, sa) = sub_strides(&cut.side_a);
        let (cols, sb) = sub_strides(&cut.side_b);
        let d = structure.total_dim();
        let mut row_of = vec![0; d];
        let mut col_of = vec![0; d];
        for idx in 0..d {
            let digits = structure.digits(idx);
            row_of[idx] = cut.side_a.iter().zip(&sa).map(|(&p, s)| digits[p] * s).sum();
            col_of[idx] = cut.side_b.iter().zip(&sb).map(|(&p, s)| digits[p] * s).sum();
        }
        Self {
            rows,
            cols,
            row_of,
            col_of,
        }
    }

    pub fn reshape(&self, amps: &CVector) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for (idx, a) in amps.iter().enumerate() {
            m[(self.row_of[idx], self.col_of[idx])] = *a;
        }
        m
    }

    /// Flat amplitudes of `u ⊗ v` across this cut.
    pub fn embed(&self, u: &CVector, v: &CVector) -> CVector {
        CVector::from_fn(self.row_of.len(), |idx, _| {
            u[self.row_of[idx]] * v[self.col_of[idx]]
        })
    }
}

fn check_cut(psi: &PureState, cut: &Bipartition) -> Result<()> {
    if cut.parties() != psi.structure().parties() {
        return Err(Error::InvalidBipartition(format!(
            "cut over {} parties applied to a {}-party state",
            cut.parties(),
            psi.structure().parties()
        )));
    }
    Ok(())
}

/// Schmidt coefficients across `cut`, descending.
pub fn schmidt_coefficients(psi: &PureState, cut: &Bipartition) -> Result<Vec<f64>> {
    check_cut(psi, cut)?;
    let layout = CutLayout::new(psi.structure(), cut);
    Ok(linalg::singular_values_desc(&layout.reshape(psi.amplitudes())))
}

/// Best biseparable approximation `|φ_A⟩|φ_B⟩` of a pure state.
#[derive(Debug, Clone)]
pub struct BiseparableApprox {
    pub bipartition: Bipartition,
    pub factor_a: CVector,
    pub factor_b: CVector,
    pub overlap_sq: f64,
}

/// Precomputed layouts for every bipartition of a structure. Reused across
/// the many searches the dual optimizer performs.
#[derive(Debug, Clone)]
pub(crate) struct BiseparableSearch {
    cuts: Vec<Bipartition>,
    layouts: Vec<CutLayout>,
}

impl BiseparableSearch {
    pub fn new(structure: &HilbertStructure) -> Self {
        let cuts = Bipartition::all(structure.parties());
        let layouts = cuts.iter().map(|c| CutLayout::new(structure, c)).collect();
        Self { cuts, layouts }
    }

    /// `(cut index, λ_max²)` of the best cut.
    pub fn best_cut(&self, amps: &CVector) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, layout) in self.layouts.iter().enumerate() {
            let s2 = linalg::top_singular_value_sq(&layout.reshape(amps));
            if s2 > best.1 + TIE_TOL {
                best = (i, s2);
            }
        }
        best
    }

    pub fn closest(&self, amps: &CVector) -> BiseparableApprox {
        let (i, _) = self.best_cut(amps);
        let (s, u, v) = linalg::top_singular_pair(&self.layouts[i].reshape(amps));
        // M = Σ σ u v†, so the overlap-maximizing factors are u and conj(v).
        BiseparableApprox {
            bipartition: self.cuts[i].clone(),
            factor_a: u,
            factor_b: v.map(|c| c.conj()),
            overlap_sq: (s * s).min(1.0),
        }
    }

    /// Overlap, flat amplitudes and cut index of the closest biseparable state.
    pub fn closest_vector(&self, amps: &CVector) -> (f64, CVector, usize) {
        let (i, _) = self.best_cut(amps);
        let (overlap, phi) = self.closest_on_cut(amps, i);
        (overlap, phi, i)
    }

    /// Closest product state across cut `i` only.
    pub fn closest_on_cut(&self, amps: &CVector, i: usize) -> (f64, CVector) {
        let (s, u, v) = linalg::top_singular_pair(&self.layouts[i].reshape(amps));
        let phi = self.layouts[i].embed(&u, &v.map(|c| c.conj()));
        ((s * s).min(1.0), phi)
    }

    pub fn overlap(&self, amps: &CVector) -> f64 {
        self.best_cut(amps).1.min(1.0)
    }
}

/// Exhaustive search over all bipartitions.
pub fn closest_biseparable(psi: &PureState) -> Result<BiseparableApprox> {
    if psi.structure().parties() < 2 {
        return Err(Error::InvalidBipartition(
            "a single party admits no bipartition".into(),
        ));
    }
    Ok(BiseparableSearch::new(psi.structure()).closest(psi.amplitudes()))
}

/// Generalized geometric measure of a pure state.
pub fn ggm_pure(psi: &PureState) -> Result<f64> {
    Ok((1.0 - closest_biseparable(psi)?.overlap_sq).max(0.0))
}

/// Fully product state `|a⟩|b⟩|c⟩…`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    factors: Vec<CVector>,
}

impl ProductState {
    pub fn new(factors: Vec<CVector>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidState("no factors".into()));
        }
        for f in &factors {
            if (f.norm_squared() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!(
                    "factor with squared norm {}",
                    f.norm_squared()
                )));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[CVector] {
        &self.factors
    }

    pub fn amplitudes(&self) -> CVector {
        let mut out = CVector::from_element(1, linalg::ONE);
        for f in &self.factors {
            out = out.kronecker(f);
        }
        out
    }

    pub fn to_state(&self) -> PureState {
        let dims = self.factors.iter().map(|f| f.len()).collect();
        let s = HilbertStructure::new(dims).expect("factor dims were validated");
        PureState::from_raw(s, self.amplitudes())
    }

    pub fn overlap_sq(&self, psi: &PureState) -> f64 {
        self.amplitudes().dotc(psi.amplitudes()).norm_sqr()
    }
}

/// ALS settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            tol: 1e-10,
            max_iters: 500,
            seed: 0,
        }
    }
}

/// Result of a closest-product-state search.
#[derive(Debug, Clone)]
pub struct ProductFit {
    pub state: ProductState,
    pub overlap_sq: f64,
    /// False when some restart hit the iteration cap before meeting `tol`.
    pub converged: bool,
    /// Overlap after each sweep of the winning restart.
    pub history: Vec<f64>,
}

/// Per-structure tables for ALS contractions.
#[derive(Debug, Clone)]
pub(crate) struct AlsWorkspace {
    dims: Vec<usize>,
    /// `digits[idx * n + k]` is the level of party `k` in basis index `idx`.
    digits: Vec<usize>,
}

impl AlsWorkspace {
    pub fn new(structure: &HilbertStructure) -> Self {
        let n = structure.parties();
        let d = structure.total_dim();
        let mut digits = Vec::with_capacity(d * n);
        for idx in 0..d {
            digits.extend(structure.digits(idx));
        }
        Self {
            dims: structure.local_dims().to_vec(),
            digits,
        }
    }

    /// `t[i] = Σ ψ[…i…] Π_{j≠k} conj(f_j)`: the optimal unnormalized factor `k`.
    fn contract_except(&self, amps: &CVector, factors: &[CVector], k: usize) -> CVector {
        let n = self.dims.len();
        let mut t = CVector::zeros(self.dims[k]);
        for (idx, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.digits[idx * n..(idx + 1) * n];
            let mut w = *a;
            for (j, f) in factors.iter().enumerate() {
                if j != k {
                    w *= f[row[j]].conj();
                }
            }
            t[row[k]] += w;
        }
        t
    }

    /// Runs ALS sweeps from `factors` in place; returns the per-sweep overlap
    /// history and whether `tol` was met.
    pub fn refine(
        &self,
        amps: &CVector,
        factors: &mut [CVector],
        tol: f64,
        max_iters: usize,
    ) -> (Vec<f64>, bool) {
        let n = self.dims.len();
        let mut history = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..max_iters {
            let mut overlap = 0.0;
            for k in 0..n {
                let t = self.contract_except(amps, factors, k);
                let norm = t.norm();
                overlap = norm * norm;
                if norm > 1e-300 {
                    factors[k] = t / C64::new(norm, 0.0);
                }
            }
            history.push(overlap);
            if overlap - prev < tol {
                return (history, true);
            }
            prev = overlap;
        }
        (history, false)
    }

    /// Starting factors: dominant left singular vector of each party's unfolding.
    pub fn spectral_start(&self, amps: &CVector) -> Vec<CVector> {
        let n = self.dims.len();
        let d = amps.len();
        (0..n)
            .map(|k| {
                let dk = self.dims[k];
                let mut rho = CMatrix::zeros(dk, dk);
                // reduced density matrix of party k
                let mut cols: std::collections::HashMap<usize, Vec<(usize, C64)>> =
                    std::collections::HashMap::new();
                for idx in 0..d {
                    let row = &self.digits[idx * n..(idx + 1) * n];
                    let mut rest = 0usize;
                    for (j, &dj) in self.dims.iter().enumerate() {
                        if j != k {
                            rest = rest * dj + row[j];
                        }
                    }
                    cols.entry(rest).or_default().push((row[k], amps[idx]));
                }
                for entries in cols.values() {
                    for &(i, a) in entries {
                        for &(j, b) in entries {
                            rho[(i, j)] += a * b.conj();
                        }
                    }
                }
                let eig = linalg::HermitianEigen::new(&rho);
                eig.vectors.column(dk - 1).into_owned()
            })
            .collect()
    }

    pub fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<CVector> {
        self.dims
            .iter()
            .map(|&d| linalg::random_unit_vector(rng, d))
            .collect()
    }

    /// Best-of-restarts ALS: restart 0 starts from the spectral guess, the
    /// rest from unitarily invariant random factors.
    pub fn best_fit(&self, amps: &CVector, cfg: &AlsConfig) -> (Vec<CVector>, f64, bool, Vec<f64>) {
        let restarts = cfg.restarts.max(1);
        let runs: Vec<_> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut factors = if r == 0 {
                    self.spectral_start(amps)
                } else {
                    self.random_start(&mut restart_rng(cfg.seed, r as u64))
                };
                let (history, ok) = self.refine(amps, &mut factors, cfg.tol, cfg.max_iters);
                let overlap = *history.last().unwrap_or(&0.0);
                (factors, overlap, ok, history)
            })
            .collect();
        let converged = runs.iter().all(|r| r.2);
        let mut best = 0;
        for (i, r) in runs.iter().enumerate() {
            if r.1 > runs[best].1 + TIE_TOL {
                best = i;
            }
        }
        let (factors, overlap, _, history) = runs.into_iter().nth(best).expect("nonempty");
        (factors, overlap.min(1.0), converged, history)
    }
}

/// Closest fully product state. Two-party states use the exact top Schmidt
/// pair; more parties use ALS with restarts.
pub fn closest_product_state(psi: &PureState, cfg: &AlsConfig) -> Result<ProductFit> {
    let structure = psi.structure();
    if structure.parties() < 2 {
        return Err(Error::InvalidBipartition(
            "product approximation needs at least two parties".into(),
        ));
    }
    if cfg.restarts == 0 {
        return Err(Error::OutOfRange("restarts must be at least 1".into()));
    }
    if structure.parties() == 2 {
        let layout = CutLayout::new(structure, &Bipartition::new(2, &[0])?);
        let (s, u, v) = linalg::top_singular_pair(&layout.reshape(psi.amplitudes()));
        let overlap = (s * s).min(1.0);
        return Ok(ProductFit {
            state: ProductState::new(vec![u, v.map(|c| c.conj())])?,
            overlap_sq: overlap,
            converged: true,
            history: vec![overlap],
        });
    }
    let ws = AlsWorkspace::new(structure);
    let (factors, overlap_sq, converged, history) = ws.best_fit(psi.amplitudes(), cfg);
    Ok(ProductFit {
        state: ProductState { factors },
        overlap_sq,
        converged,
        history,
    })
}

/// Value of a measure together with the optimizer's convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub converged: bool,
}

/// Geometric measure of a pure state.
pub fn geometric_measure_pure(psi: &PureState, cfg: &AlsConfig) -> Result<Estimate> {
    let fit = closest_product_state(psi, cfg)?;
    Ok(Estimate {
        value: (1.0 - fit.overlap_sq).max(0.0),
        converged: fit.converged,
    })
}
