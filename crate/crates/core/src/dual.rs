//! Dual function and the linear lower bound.
//!
//! For a Hermitian operator `A` the dual function is
//! `Ê(A) = sup_ψ ⟨ψ|A|ψ⟩ - E(ψ)`, and for a record `(A_k, a_k)` the bound is
//! `ε(a) = sup_r Σ r_k a_k - Ê(Σ r_k A_k)`.
//!
//! With `E(ψ) = 1 - max_φ |⟨φ|ψ⟩|²` over product or biseparable `φ`,
//! `Ê(A) = max_φ λ_max(A + |φ⟩⟨φ|) - 1`, which is evaluated by alternating
//! between the dominant eigenvector and the closest product/biseparable state.
//!
//! Every evaluated `ψ` gives an affine minorant `Ê(r) ≥ r·e(ψ) - E(ψ)`, so the
//! outer problem is solved by a cutting-plane LP over a box `|r_k| ≤ cap`.
//! The LP value is an upper estimate of `ε` restricted to that box.

use std::fmt;
use std::str::FromStr;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64};
use crate::measures::{restart_rng, AlsConfig, AlsWorkspace, Bipartition, BiseparableSearch, CutLayout};
use crate::observables::{HermitianObservable, HilbertStructure, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Geometric,
    Ggm,
}

impl MeasureKind {
    /// Geometric for two parties, GGM otherwise.
    pub fn default_for(parties: usize) -> Self {
        if parties <= 2 {
            MeasureKind::Geometric
        } else {
            MeasureKind::Ggm
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Geometric => "geometric",
            MeasureKind::Ggm => "ggm",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" | "geo" | "eg" => Ok(MeasureKind::Geometric),
            "ggm" => Ok(MeasureKind::Ggm),
            other => Err(Error::UnknownName(format!("measure '{other}'"))),
        }
    }
}

/// Settings for a single evaluation of `Ê`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    pub measure: MeasureKind,
    /// Random product starting points, in addition to the spectral start.
    pub restarts: usize,
    /// Stop an alternation once the objective gains less than this.
    pub tol: f64,
    pub max_iters: usize,
    /// Used for the final entanglement estimate of multipartite geometric runs.
    pub als: AlsConfig,
    pub seed: u64,
}

impl DualConfig {
    pub fn new(measure: MeasureKind) -> Self {
        Self {
            measure,
            restarts: 8,
            tol: 1e-12,
            max_iters: 1000,
            als: AlsConfig::default(),
            seed: 0,
        }
    }
}

/// Value of `Ê(A)` with its maximizer.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    pub value: f64,
    pub maximizer: PureState,
    /// `⟨ψ*|A_k|ψ*⟩` for each requested observable.
    pub witness_expectations: Vec<f64>,
    /// `E(ψ*)`.
    pub entanglement: f64,
    pub converged: bool,
    /// Objective after each alternation step of the winning start.
    pub history: Vec<f64>,
}

/// Starting or current separable point of an alternation.
#[derive(Debug, Clone)]
struct Anchor {
    phi: CVector,
    /// Party factors, kept for warm ALS sweeps.
    factors: Option<Vec<CVector>>,
    /// Bipartition `phi` is product across, on the exact path.
    cut: Option<usize>,
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    psi: CVector,
    anchor: Anchor,
    entanglement: f64,
    converged: bool,
    history: Vec<f64>,
}

/// Closest-separable oracle for one structure and measure.
#[derive(Debug, Clone)]
struct Engine {
    structure: HilbertStructure,
    /// Exact path: every bipartition (one cut for two parties).
    search: Option<BiseparableSearch>,
    /// ALS path: multipartite geometric measure.
    als: Option<AlsWorkspace>,
    tol: f64,
    max_iters: usize,
    als_cfg: AlsConfig,
}

impl Engine {
    fn new(structure: &HilbertStructure, measure: MeasureKind, tol: f64, max_iters: usize, als_cfg: AlsConfig) -> Result<Self> {
        if structure.parties() < 2 {
            return Err(Error::DimensionTooSmall(
                "the dual needs at least two parties".into(),
            ));
        }
        let exact = measure == MeasureKind::Ggm || structure.parties() == 2;
        Ok(Self {
            structure: structure.clone(),
            search: exact.then(|| BiseparableSearch::new(structure)),
            als: (!exact).then(|| AlsWorkspace::new(structure)),
            tol,
            max_iters,
            als_cfg,
        })
    }

    fn kron_all(factors: &[CVector]) -> CVector {
        factors
            .iter()
            .fold(CVector::from_element(1, linalg::ONE), |acc, f| acc.kronecker(f))
    }

    /// Closest separable state to `psi`. On the exact path `local` restricts
    /// the search to the cut of `warm`; on the ALS path sweeps start from the
    /// factors of `warm`.
    fn closest(&self, psi: &CVector, warm: Option<&Anchor>, local: bool) -> (f64, Anchor) {
        if let Some(search) = &self.search {
            if let (true, Some(cut)) = (local, warm.and_then(|a| a.cut)) {
                let (overlap, phi) = search.closest_on_cut(psi, cut);
                return (overlap, Anchor { phi, factors: None, cut: Some(cut) });
            }
            let (overlap, phi, cut) = search.closest_vector(psi);
            return (overlap, Anchor { phi, factors: None, cut: Some(cut) });
        }
        let ws = self.als.as_ref().expect("one path is always set");
        let mut factors = match warm.and_then(|a| a.factors.as_ref()) {
            Some(f) => f.clone(),
            None => ws.spectral_start(psi),
        };
        let (history, _) = ws.refine(psi, &mut factors, self.tol, self.max_iters);
        let overlap = history.last().copied().unwrap_or(0.0).min(1.0);
        let phi = Self::kron_all(&factors);
        (overlap, Anchor { phi, factors: Some(factors), cut: None })
    }

    /// Overlap with the closest separable state, as accurate as the path allows.
    fn best_overlap(&self, psi: &CVector, seed: u64) -> f64 {
        match (&self.search, &self.als) {
            (Some(search), _) => search.overlap(psi),
            (None, Some(ws)) => {
                let cfg = AlsConfig { seed, ..self.als_cfg };
                ws.best_fit(psi, &cfg).1
            }
            _ => unreachable!(),
        }
    }

    fn random_anchor(&self, rng: &mut ChaCha8Rng) -> Anchor {
        let factors: Vec<CVector> = self
            .structure
            .local_dims()
            .iter()
            .map(|&d| linalg::random_unit_vector(rng, d))
            .collect();
        Anchor {
            phi: Self::kron_all(&factors),
            factors: self.als.is_some().then_some(factors),
            cut: None,
        }
    }

    /// Alternation from `anchor`. Steps on the exact path stay within the
    /// current cut; a full search over cuts runs whenever progress stalls and
    /// the alternation ends only when that search cannot improve either.
    fn alternate(&self, op: &CMatrix, eig: &HermitianEigen, mut anchor: Anchor) -> Candidate {
        let mut history = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        let mut converged = false;
        let mut psi = eig.vectors.column(eig.values.len() - 1).into_owned();
        let mut overlap = 0.0;
        let mut local = false;
        for _ in 0..self.max_iters {
            let (_, next) = eig.dominant_of_rank_one_update(&anchor.phi);
            psi = next;
            let (mut ov, mut next_anchor) = self.closest(&psi, Some(&anchor), local);
            let expect = linalg::expect(op, &psi);
            let mut obj = expect - 1.0 + ov;
            if local && obj - prev < self.tol {
                let (full_ov, full_anchor) = self.closest(&psi, None, false);
                if full_ov > ov {
                    ov = full_ov;
                    next_anchor = full_anchor;
                    obj = expect - 1.0 + ov;
                }
            }
            overlap = ov;
            anchor = next_anchor;
            history.push(obj);
            if obj - prev < self.tol {
                converged = true;
                break;
            }
            prev = obj;
            local = self.search.is_some();
        }
        let value = *history.last().unwrap_or(&f64::NEG_INFINITY);
        Candidate {
            value,
            psi,
            anchor,
            entanglement: (1.0 - overlap).max(0.0),
            converged,
            history,
        }
    }

    /// Runs the spectral start, every warm anchor and `cold` random starts.
    /// Candidates come back best first; ties keep start order.
    fn evaluate(&self, op: &CMatrix, warm: &[Anchor], cold: usize, seed: u64, stream: u64) -> Vec<Candidate> {
        let eig = HermitianEigen::new(op);
        let top = eig.vectors.column(eig.values.len() - 1).into_owned();
        let mut starts = vec![self.closest(&top, None, false).1];
        starts.extend(warm.iter().cloned());
        let base = seed.wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
        for i in 0..cold {
            starts.push(self.random_anchor(&mut restart_rng(base, i as u64)));
        }
        let mut cands: Vec<Candidate> = starts
            .into_par_iter()
            .map(|a| self.alternate(op, &eig, a))
            .collect();
        cands.retain(|c| c.value.is_finite() && c.psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if self.als.is_some() {
            // ALS overlaps are lower estimates; rerun the leader with restarts.
            let lead = argmax(&cands);
            let c = &mut cands[lead];
            let overlap = self.best_overlap(&c.psi, base).max(1.0 - c.entanglement);
            c.entanglement = (1.0 - overlap).max(0.0);
            c.value = linalg::expect(op, &c.psi) - c.entanglement;
        }
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by(|&i, &j| cands[j].value.total_cmp(&cands[i].value).then(i.cmp(&j)));
        let mut slots: Vec<Option<Candidate>> = cands.into_iter().map(Some).collect();
        order.into_iter().map(|i| slots[i].take().expect("each index once")).collect()
    }
}

fn argmax(cands: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in cands.iter().enumerate() {
        if c.value > cands[best].value {
            best = i;
        }
    }
    best
}

fn check_structures(ops: &[HermitianObservable], structure: &HilbertStructure) -> Result<()> {
    for op in ops {
        if op.structure() != structure {
            return Err(Error::DimensionMismatch(format!(
                "observable '{}' acts on {} but expected {}",
                op.label(),
                op.structure(),
                structure
            )));
        }
    }
    Ok(())
}

/// Evaluates `Ê(A)` for the configured measure. `probes` are the
/// observables whose expectations at the maximizer are reported.
pub fn dual_value(
    op: &HermitianObservable,
    probes: &[HermitianObservable],
    cfg: &DualConfig,
) -> Result<DualEvaluation> {
    let structure = op.structure();
    check_structures(probes, structure)?;
    let engine = Engine::new(structure, cfg.measure, cfg.tol, cfg.max_iters, cfg.als)?;
    let best = engine
        .evaluate(op.matrix(), &[], cfg.restarts, cfg.seed, 0)
        .into_iter()
        .next()
        .expect("at least the spectral start");
    let witness_expectations = probes
        .iter()
        .map(|p| linalg::expect(p.matrix(), &best.psi))
        .collect();
    Ok(DualEvaluation {
        value: best.value,
        maximizer: PureState::from_raw(structure.clone(), best.psi),
        witness_expectations,
        entanglement: best.entanglement,
        converged: best.converged,
        history: best.history,
    })
}

/// `a_k - ⟨ψ*|A_k|ψ*⟩`: a supergradient of `f(r) = r·a - Ê(Σ r_k A_k)`.
pub fn supergradient(record_values: &[f64], eval: &DualEvaluation) -> Result<Vec<f64>> {
    if record_values.len() != eval.witness_expectations.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} expectations",
            record_values.len(),
            eval.witness_expectations.len()
        )));
    }
    Ok(record_values
        .iter()
        .zip(&eval.witness_expectations)
        .map(|(a, e)| a - e)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterMethod {
    CuttingPlane,
    Supergradient,
}

/// Settings for [`lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundConfig {
    pub method: OuterMethod,
    pub max_iters: usize,
    pub slope_cap: f64,
    /// Cutting plane: stop when the LP upper estimate is within `tol` of the
    /// best evaluated point. Supergradient: minimum gain over `patience` steps.
    pub tol: f64,
    pub warm_restarts: usize,
    pub cold_restarts: usize,
    pub final_restarts: usize,
    pub step0: f64,
    pub patience: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub als: AlsConfig,
    pub seed: u64,
}

impl Default for LowerBoundConfig {
    fn default() -> Self {
        Self {
            method: OuterMethod::CuttingPlane,
            max_iters: 300,
            slope_cap: 100.0,
            tol: 1e-7,
            warm_restarts: 5,
            cold_restarts: 3,
            final_restarts: 30,
            step0: 0.5,
            patience: 20,
            inner_tol: 1e-12,
            inner_max_iters: 1000,
            als: AlsConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Converged,
    IterationCap,
    InfeasibleSuspected,
}

impl fmt::Display for BoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundStatus::Converged => "converged",
            BoundStatus::IterationCap => "iteration_cap",
            BoundStatus::InfeasibleSuspected => "infeasible_suspected",
        })
    }
}

/// Certified lower bound and the linear witness behind it:
/// `E(ρ) ≥ Σ_k slope_k ⟨A_k⟩ - intercept` for every state `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// `max(0, raw)`.
    pub bound: f64,
    pub slope: Vec<f64>,
    /// `Ê(Σ slope_k A_k)`.
    pub intercept: f64,
    /// `slope·a - intercept` before clamping.
    pub raw: f64,
    /// Cutting-plane model value: upper estimate of the bound over the
    /// slope box, given the evaluated maximizers.
    pub upper_estimate: Option<f64>,
    pub iterations: usize,
    pub status: BoundStatus,
    /// Best objective after each outer iteration.
    pub history: Vec<f64>,
}

impl BoundResult {
    fn infeasible(m: usize) -> Self {
        BoundResult {
            bound: 0.0,
            slope: vec![0.0; m],
            intercept: 0.0,
            raw: 0.0,
            upper_estimate: None,
            iterations: 0,
            status: BoundStatus::InfeasibleSuspected,
            history: Vec::new(),
        }
    }
}

/// Affine minorant `r ↦ r·e - entanglement` of `Ê`.
#[derive(Debug, Clone)]
struct Cut {
    e: Vec<f64>,
    entanglement: f64,
}

impl Cut {
    fn at(&self, r: &[f64]) -> f64 {
        dot(r, &self.e) - self.entanglement
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Outer<'a> {
    mats: Vec<&'a CMatrix>,
    values: &'a [f64],
    engine: Engine,
    cfg: &'a LowerBoundConfig,
    cuts: Vec<Cut>,
    pool: Vec<Anchor>,
    stream: u64,
}

impl Outer<'_> {
    fn operator(&self, r: &[f64]) -> CMatrix {
        let n = self.mats[0].nrows();
        let mut op = CMatrix::zeros(n, n);
        for (m, &w) in self.mats.iter().zip(r) {
            if w != 0.0 {
                op += *m * C64::new(w, 0.0);
            }
        }
        op
    }

    fn model(&self, r: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.at(r))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn add_cut(&mut self, cut: Cut) {
        let dup = self.cuts.iter().any(|c| {
            (c.entanglement - cut.entanglement).abs() < 1e-12
                && c.e.iter().zip(&cut.e).all(|(x, y)| (x - y).abs() < 1e-12)
        });
        if !dup {
            self.cuts.push(cut);
        }
    }

    /// Evaluates `Ê(r)`, records every maximizer as a cut and refreshes the
    /// warm pool. Returns the best candidate's value and gradient data.
    fn evaluate(&mut self, r: &[f64], warm: usize, cold: usize) -> (f64, Vec<f64>) {
        let op = self.operator(r);
        let pool: Vec<Anchor> = self.pool.iter().take(warm).cloned().collect();
        self.stream += 1;
        let cands = self
            .engine
            .evaluate(&op, &pool, cold, self.cfg.seed, self.stream);
        let mut best_e = Vec::new();
        for (i, c) in cands.iter().enumerate() {
            let e: Vec<f64> = self.mats.iter().map(|m| linalg::expect(m, &c.psi)).collect();
            if i == 0 {
                best_e = e.clone();
            }
            self.add_cut(Cut {
                e,
                entanglement: c.entanglement,
            });
        }
        let value = cands[0].value;
        self.pool = cands.into_iter().map(|c| c.anchor).collect();
        (value, best_e)
    }

    /// Maximizes `r·a - t` subject to every cut and the slope box.
    fn solve_lp(&self) -> Result<(Vec<f64>, f64)> {
        let cap = self.cfg.slope_cap;
        let m = self.values.len();
        let rows = self.cuts.len() + 2 * m;
        // Columns r_1..r_m, t. Rows: cuts `r·e - t ≤ E`, then `±r_k ≤ cap`.
        let mut colptr = vec![0];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        for k in 0..m {
            for (i, cut) in self.cuts.iter().enumerate() {
                if cut.e[k] != 0.0 {
                    rowval.push(i);
                    nzval.push(cut.e[k]);
                }
            }
            rowval.extend([self.cuts.len() + 2 * k, self.cuts.len() + 2 * k + 1]);
            nzval.extend([1.0, -1.0]);
            colptr.push(rowval.len());
        }
        rowval.extend(0..self.cuts.len());
        nzval.extend(std::iter::repeat_n(-1.0, self.cuts.len()));
        colptr.push(rowval.len());
        let a = CscMatrix::new(rows, m + 1, colptr, rowval, nzval);
        let b: Vec<f64> = self
            .cuts
            .iter()
            .map(|c| c.entanglement)
            .chain(std::iter::repeat_n(cap, 2 * m))
            .collect();
        let mut q: Vec<f64> = self.values.iter().map(|v| -v).collect();
        q.push(1.0);
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(1e-10)
            .tol_gap_rel(1e-10)
            .tol_feas(1e-10)
            .build()
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let p = CscMatrix::zeros((m + 1, m + 1));
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &[NonnegativeConeT(rows)], settings)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {}
            status => return Err(Error::Solver(format!("{status:?}"))),
        }
        let slope: Vec<f64> = sol.x[..m].iter().map(|v| v.clamp(-cap, cap)).collect();
        Ok((slope, -sol.obj_val))
    }
}

/// Certified lower bound `ε(a)` for the record `(observables, values)`.
pub fn lower_bound(
    observables: &[HermitianObservable],
    values: &[f64],
    measure: MeasureKind,
    cfg: &LowerBoundConfig,
) -> Result<BoundResult> {
    if observables.is_empty() {
        return Err(Error::DimensionMismatch("no observables".into()));
    }
    if observables.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observables but {} values",
            observables.len(),
            values.len()
        )));
    }
    let structure = observables[0].structure();
    check_structures(observables, structure)?;
    let m = observables.len();
    for (op, &a) in observables.iter().zip(values) {
        let (lo, hi) = op.spectral_range();
        if !a.is_finite() || a < lo - 1e-9 || a > hi + 1e-9 {
            return Ok(BoundResult::infeasible(m));
        }
    }

    let mut outer = Outer {
        mats: observables.iter().map(|o| o.matrix()).collect(),
        values,
        engine: Engine::new(structure, measure, cfg.inner_tol, cfg.inner_max_iters, cfg.als)?,
        cfg,
        cuts: Vec::new(),
        pool: Vec::new(),
        stream: 0,
    };

    let mut points: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let (v0, e0) = outer.evaluate(&points[0], cfg.warm_restarts, cfg.cold_restarts);
    let mut history = vec![-v0];
    let mut status = BoundStatus::IterationCap;
    let mut iterations = 0;
    let mut upper = None;

    // Best evaluated point under the current model.
    let best_point = |outer: &Outer, points: &[Vec<f64>]| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, r) in points.iter().enumerate() {
            let f = dot(r, values) - outer.model(r);
            if f > best.1 {
                best = (i, f);
            }
        }
        best
    };

    match cfg.method {
        OuterMethod::CuttingPlane => {
            for it in 1..=cfg.max_iters {
                let (r, up) = outer.solve_lp()?;
                upper = Some(up);
                let (_, best_f) = best_point(&outer, &points);
                if up - best_f <= cfg.tol {
                    status = BoundStatus::Converged;
                    break;
                }
                iterations = it;
                outer.evaluate(&r, cfg.warm_restarts, cfg.cold_restarts);
                points.push(r);
                history.push(best_point(&outer, &points).1);
            }
        }
        OuterMethod::Supergradient => {
            let mut r = vec![0.0; m];
            let mut e = e0;
            let mut best_f = history[0];
            let mut since = 0;
            for it in 1..=cfg.max_iters {
                iterations = it;
                let eta = cfg.step0 / (it as f64).sqrt();
                for k in 0..m {
                    r[k] = (r[k] + eta * (values[k] - e[k])).clamp(-cfg.slope_cap, cfg.slope_cap);
                }
                let (value, grad_e) = outer.evaluate(&r, cfg.warm_restarts, cfg.cold_restarts);
                e = grad_e;
                points.push(r.clone());
                let f = dot(&r, values) - value;
                if f > best_f + cfg.tol {
                    best_f = f;
                    since = 0;
                } else {
                    since += 1;
                }
                history.push(history.last().copied().unwrap_or(f64::NEG_INFINITY).max(f));
                if since >= cfg.patience {
                    status = BoundStatus::Converged;
                    break;
                }
            }
        }
    }

    // High-accuracy pass at the winner.
    let (idx, _) = best_point(&outer, &points);
    let slope = points[idx].clone();
    let (final_value, _) = outer.evaluate(&slope, cfg.warm_restarts, cfg.final_restarts);
    let intercept = final_value.max(outer.model(&slope));
    let raw = dot(&slope, values) - intercept;
    if cfg.method == OuterMethod::Supergradient || upper.is_some() {
        upper = outer.solve_lp().ok().map(|(_, u)| u);
    }
    if raw > 1.0 + 1e-6 {
        status = BoundStatus::InfeasibleSuspected;
    }
    // The best-so-far sequence is nondecreasing by construction; keep it so
    // after the final pass may have lowered the winner.
    Ok(BoundResult {
        bound: raw.max(0.0),
        slope,
        intercept,
        raw,
        upper_estimate: upper,
        iterations,
        status,
        history,
    })
}

/// Outcome of a sampling audit of `Ê`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub samples: usize,
    /// Largest sampled `⟨ψ|A|ψ⟩ - E(ψ)`.
    pub max_objective: f64,
    /// `max_objective - eval.value`; nonpositive when the audit is clean.
    pub worst_excess: f64,
}

/// Tolerance of [`verify_dual`].
pub const VERIFY_TOL: f64 = 1e-6;

/// Samples Haar-random states, perturbed product and biseparable states, and
/// perturbations of the maximizer; fails if any beats `eval.value` by more
/// than [`VERIFY_TOL`].
pub fn verify_dual(
    op: &HermitianObservable,
    measure: MeasureKind,
    eval: &DualEvaluation,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let structure = op.structure();
    if eval.maximizer.structure() != structure {
        return Err(Error::DimensionMismatch(
            "evaluation belongs to another structure".into(),
        ));
    }
    let als = AlsConfig {
        restarts: 3,
        ..AlsConfig::default()
    };
    let engine = Engine::new(structure, measure, 1e-12, 500, als)?;
    let cuts = Bipartition::all(structure.parties());
    let layouts: Vec<CutLayout> = cuts.iter().map(|c| CutLayout::new(structure, c)).collect();
    let d = structure.total_dim();
    let star = eval.maximizer.amplitudes();

    let perturb = |v: CVector, rng: &mut ChaCha8Rng| {
        let scale = 10f64.powf(rng.random_range(-4.0..-0.5));
        let noise = linalg::random_unit_vector(rng, d);
        linalg::normalize(&(v + noise * C64::new(scale, 0.0)))
    };
    let results: Vec<(f64, CVector)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(seed, i as u64);
            let psi = match i % 4 {
                0 => linalg::random_unit_vector(&mut rng, d),
                1 => {
                    let a = engine.random_anchor(&mut rng);
                    perturb(a.phi, &mut rng)
                }
                2 => {
                    let layout = &layouts[rng.random_range(0..layouts.len())];
                    let u = linalg::random_unit_vector(&mut rng, layout.rows);
                    let v = linalg::random_unit_vector(&mut rng, layout.cols);
                    perturb(layout.embed(&u, &v), &mut rng)
                }
                _ => perturb(star.clone(), &mut rng),
            };
            let overlap = engine.best_overlap(&psi, seed ^ i as u64);
            (linalg::expect(op.matrix(), &psi) - 1.0 + overlap, psi)
        })
        .collect();

    let mut worst = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[worst].0 {
            worst = i;
        }
    }
    let (max_objective, state) = results
        .get(worst)
        .cloned()
        .unwrap_or((f64::NEG_INFINITY, star.clone()));
    let worst_excess = max_objective - eval.value;
    if worst_excess > VERIFY_TOL {
        return Err(Error::DualViolation {
            excess: worst_excess,
            state: state.iter().map(|c| (c.re, c.im)).collect(),
        });
    }
    Ok(VerifyReport {
        samples,
        max_objective,
        worst_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{
        bell_correlators, build_named_state, embedded_pauli, parse_pauli_sum, tensor_product,
        EmbeddedKind, NamedState, PauliTermSum,
    };
    use crate::measures::schmidt_coefficients;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn qubits(n: usize) -> HilbertStructure {
        HilbertStructure::qubits(n).unwrap()
    }

    fn random_observable(structure: &HilbertStructure, seed: u64) -> HermitianObservable {
        let mut rng = restart_rng(seed, 3);
        let n = structure.total_dim();
        let g = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        HermitianObservable::new(structure.clone(), h, "R").unwrap()
    }

    #[test]
    fn trivial_operators() {
        for (s, measure) in [
            (qubits(2), MeasureKind::Geometric),
            (qubits(3), MeasureKind::Ggm),
            (qubits(3), MeasureKind::Geometric),
        ] {
            let cfg = DualConfig::new(measure);
            let zero = HermitianObservable::zero(s.clone());
            close(dual_value(&zero, &[], &cfg).unwrap().value, 0.0, 1e-10);
            let id = HermitianObservable::identity(s.clone());
            close(dual_value(&id, &[], &cfg).unwrap().value, 1.0, 1e-10);
        }
    }

    /// Oracle for a two-qubit operator: random sampling plus hill climbing of
    /// `⟨ψ|A|ψ⟩ - (1 - s_max²)` with the Schmidt coefficient from an SVD.
    fn sampled_two_qubit_dual(op: &HermitianObservable) -> f64 {
        let s = qubits(2);
        let cut = Bipartition::new(2, &[0]).unwrap();
        let f = |v: &CVector| {
            let psi = PureState::normalized(s.clone(), v.clone()).unwrap();
            let smax = schmidt_coefficients(&psi, &cut).unwrap()[0];
            linalg::expect(op.matrix(), psi.amplitudes()) - 1.0 + smax * smax
        };
        let mut rng = restart_rng(42, 0);
        let mut pool: Vec<(f64, CVector)> = (0..20_000)
            .map(|_| {
                let v = linalg::random_unit_vector(&mut rng, 4);
                (f(&v), v)
            })
            .collect();
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        pool.truncate(10);
        let mut best = f64::NEG_INFINITY;
        for (mut val, mut v) in pool {
            let mut step = 0.3;
            while step > 1e-7 {
                let mut improved = false;
                for _ in 0..40 {
                    let trial = linalg::normalize(
                        &(&v + linalg::random_unit_vector(&mut rng, 4) * C64::new(step, 0.0)),
                    );
                    let t = f(&trial);
                    if t > val {
                        val = t;
                        v = trial;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best = best.max(val);
        }
        best
    }

    #[test]
    fn bell_projector_against_sampling_oracle() {
        let bell = build_named_state(NamedState::BellEmbedded(2)).unwrap();
        let proj = HermitianObservable::projector(&bell);
        let oracle = sampled_two_qubit_dual(&proj);
        let got = dual_value(&proj, &[], &DualConfig::new(MeasureKind::Geometric)).unwrap();
        close(got.value, oracle, 1e-5);
        // closed form for a pure projector: sqrt(1 - E(Ψ))
        close(got.value, std::f64::consts::FRAC_1_SQRT_2, 1e-9);
    }

    #[test]
    fn random_two_qubit_operators_against_sampling_oracle() {
        for seed in 0..3 {
            let op = random_observable(&qubits(2), seed);
            let oracle = sampled_two_qubit_dual(&op);
            let got = dual_value(&op, &[], &DualConfig::new(MeasureKind::Geometric)).unwrap();
            assert!(got.value >= oracle - 1e-5, "{} < {oracle}", got.value);
            close(got.value, oracle, 1e-4);
        }
    }

    #[test]
    fn alternation_is_monotone() {
        for (s, measure) in [
            (qubits(2), MeasureKind::Geometric),
            (qubits(3), MeasureKind::Ggm),
            (HilbertStructure::new(vec![2, 3, 2]).unwrap(), MeasureKind::Geometric),
        ] {
            for seed in 0..3 {
                let op = random_observable(&s, 10 + seed);
                let eval = dual_value(&op, &[], &DualConfig::new(measure)).unwrap();
                for w in eval.history.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn supergradient_examples() {
        let ops = bell_correlators(2, false).unwrap();
        let zero = HermitianObservable::zero(qubits(2));
        let eval = dual_value(&zero, &ops, &DualConfig::new(MeasureKind::Geometric)).unwrap();
        let e = eval.witness_expectations.clone();
        let g = supergradient(&e, &eval).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-15));
        let a = [0.7, 0.7, 0.7];
        let g = supergradient(&a, &eval).unwrap();
        for k in 0..3 {
            close(g[k], a[k] - e[k], 1e-15);
        }
        assert!(supergradient(&[1.0], &eval).is_err());
    }

    #[test]
    fn finite_difference_supergradient() {
        let ops = bell_correlators(2, false).unwrap();
        let a = [0.5, 0.5, 0.5];
        let cfg = DualConfig::new(MeasureKind::Geometric);
        let f = |r: &[f64]| {
            let op = HermitianObservable::linear_combination(r, &ops).unwrap();
            let ev = dual_value(&op, &ops, &cfg).unwrap();
            (dot(r, &a) - ev.value, ev)
        };
        let h = 1e-4;
        for seed in 0..4 {
            let mut rng = restart_rng(900, seed);
            let r: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (f0, ev) = f(&r);
            let g = supergradient(&a, &ev).unwrap();
            for k in 0..3 {
                let mut rk = r.clone();
                rk[k] += h;
                let (fk, _) = f(&rk);
                assert!(fk - f0 <= h * g[k] + 1e-7, "k={k}: {} > {}", fk - f0, h * g[k]);
            }
        }
    }

    #[test]
    fn bell_d3_bounds() {
        let ops = bell_correlators(3, false).unwrap();
        let cfg = LowerBoundConfig::default();
        let pos = lower_bound(&ops, &[0.4; 3], MeasureKind::Geometric, &cfg).unwrap();
        assert!(pos.bound > 1e-3, "{pos:?}");
        assert_eq!(pos.status, BoundStatus::Converged);
        let zero = lower_bound(&ops, &[0.3; 3], MeasureKind::Geometric, &cfg).unwrap();
        assert!(zero.bound <= 1e-6, "{zero:?}");
        let mixed = lower_bound(&ops, &[0.0; 3], MeasureKind::Geometric, &cfg).unwrap();
        assert!(mixed.bound <= 1e-6);
        // reported fields are consistent
        let recomputed = (dot(&pos.slope, &[0.4; 3]) - pos.intercept).max(0.0);
        close(pos.bound, recomputed, 1e-10);
        assert!(pos.upper_estimate.unwrap() >= pos.bound - 1e-9);
        assert!(pos.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn supergradient_method_agrees_on_a_smooth_instance() {
        let ops = bell_correlators(2, false).unwrap();
        let a = [0.2; 3];
        let kelley = lower_bound(&ops, &a, MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
        let cfg = LowerBoundConfig {
            method: OuterMethod::Supergradient,
            ..LowerBoundConfig::default()
        };
        let ascent = lower_bound(&ops, &a, MeasureKind::Geometric, &cfg).unwrap();
        assert!(ascent.bound <= kelley.bound + 1e-6);
        assert!(ascent.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn pure_state_ceiling() {
        let ops = bell_correlators(2, false).unwrap();
        let res = lower_bound(&ops, &[1.0; 3], MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
        assert!(res.bound <= 0.5 + 1e-6, "{res:?}");
        assert!(res.bound > 0.4);
    }

    #[test]
    fn scaling_covariance() {
        let ops = bell_correlators(3, false).unwrap();
        let a = [0.5; 3];
        let base = lower_bound(&ops, &a, MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
        for s in [0.5, 3.0] {
            let scaled: Vec<_> = ops.iter().map(|o| o.scaled(s)).collect();
            let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
            let res = lower_bound(&scaled, &sa, MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
            close(res.bound, base.bound, 1e-6);
        }
    }

    #[test]
    fn infeasible_records_are_flagged() {
        let zz = parse_pauli_sum(&PauliTermSum::new([(1.0, "ZZ")])).unwrap();
        let res = lower_bound(&[zz], &[1.5], MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
        assert_eq!(res.status, BoundStatus::InfeasibleSuspected);
        assert_eq!(res.bound, 0.0);
        // each value feasible alone, jointly impossible: ⟨XX⟩ = ⟨-YY⟩ = ⟨ZZ⟩ = 1 and ⟨ZI⟩ = 1
        let mut ops = bell_correlators(2, false).unwrap();
        ops.push(parse_pauli_sum(&PauliTermSum::new([(1.0, "ZI")])).unwrap());
        let res = lower_bound(&ops, &[1.0; 4], MeasureKind::Geometric, &LowerBoundConfig::default()).unwrap();
        assert_eq!(res.status, BoundStatus::InfeasibleSuspected, "{res:?}");
    }

    #[test]
    fn mismatched_inputs() {
        let ops = bell_correlators(2, false).unwrap();
        assert!(matches!(
            lower_bound(&ops, &[0.1], MeasureKind::Geometric, &LowerBoundConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
        let mut mixed = ops.clone();
        mixed.push(tensor_product(&[
            embedded_pauli(EmbeddedKind::Z, 3).unwrap(),
            embedded_pauli(EmbeddedKind::Z, 3).unwrap(),
        ])
        .unwrap());
        assert!(matches!(
            lower_bound(&mixed, &[0.1; 4], MeasureKind::Geometric, &LowerBoundConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn audit_trivial_operators() {
        let s = qubits(3);
        for op in [HermitianObservable::zero(s.clone()), HermitianObservable::identity(s.clone())] {
            for measure in [MeasureKind::Ggm, MeasureKind::Geometric] {
                let eval = dual_value(&op, &[], &DualConfig::new(measure)).unwrap();
                let rep = verify_dual(&op, measure, &eval, 1000, 5).unwrap();
                assert_eq!(rep.samples, 1000);
                assert!(rep.worst_excess <= VERIFY_TOL);
            }
        }
    }

    #[test]
    fn audit_catches_an_understated_value() {
        let bell = build_named_state(NamedState::BellEmbedded(2)).unwrap();
        let proj = HermitianObservable::projector(&bell);
        let mut eval = dual_value(&proj, &[], &DualConfig::new(MeasureKind::Geometric)).unwrap();
        eval.value -= 0.05;
        assert!(matches!(
            verify_dual(&proj, MeasureKind::Geometric, &eval, 400, 1),
            Err(Error::DualViolation { .. })
        ));
    }

    #[test]
    fn conjugate_is_convex_along_segments() {
        let s = qubits(3);
        let a = random_observable(&s, 70);
        let b = random_observable(&s, 71);
        let cfg = DualConfig::new(MeasureKind::Ggm);
        let ea = dual_value(&a, &[], &cfg).unwrap().value;
        let eb = dual_value(&b, &[], &cfg).unwrap().value;
        for lam in [0.25, 0.5, 0.75] {
            let mix = HermitianObservable::linear_combination(&[lam, 1.0 - lam], &[a.clone(), b.clone()]).unwrap();
            let em = dual_value(&mix, &[], &cfg).unwrap().value;
            assert!(em <= lam * ea + (1.0 - lam) * eb + 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn sandwich_bounds(seed in 0u64..1_000_000, ggm in any::<bool>()) {
            let s = HilbertStructure::new(vec![2, 2, 2]).unwrap();
            let op = random_observable(&s, seed);
            let measure = if ggm { MeasureKind::Ggm } else { MeasureKind::Geometric };
            let v = dual_value(&op, &[], &DualConfig::new(measure)).unwrap().value;
            let (_, lmax) = op.spectral_range();
            prop_assert!(v >= lmax - 1.0 - 1e-8);
            prop_assert!(v <= lmax + 1e-8);
        }

        #[test]
        fn bound_is_convex_in_the_data(seed in 0u64..1_000_000) {
            // Records from random two-qubit states are feasible.
            let ops = bell_correlators(2, false).unwrap();
            let mut rng = restart_rng(seed, 1);
            let rec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                let v = linalg::random_unit_vector(rng, 4);
                ops.iter().map(|o| linalg::expect(o.matrix(), &v)).collect()
            };
            let a1 = rec(&mut rng);
            let a2 = rec(&mut rng);
            let cfg = LowerBoundConfig::default();
            let b1 = lower_bound(&ops, &a1, MeasureKind::Geometric, &cfg).unwrap().bound;
            let b2 = lower_bound(&ops, &a2, MeasureKind::Geometric, &cfg).unwrap().bound;
            let lam = 0.25 * (1 + seed % 3) as f64;
            let mix: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
            let bm = lower_bound(&ops, &mix, MeasureKind::Geometric, &cfg).unwrap().bound;
            prop_assert!(bm <= lam * b1 + (1.0 - lam) * b2 + 1e-4);
        }
    }
}
