//! Filling volumes of integral 1-cycles over ℤ, ℚ and ℤ_S, the FV²
//! estimators, the ⪯ comparison of sampled functions, and the linearity
//! probe.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cayley::{
    anchored_cycles, build_ball, connected_cycles, int_chain_l1, lazy_l1, CayleyBall, CayleyGraph, Chain, ComplexError,
    IntChain, LazyChain, DEFAULT_CYCLE_LIMIT,
};
use crate::exactopt::{l1_min_integral_with, l1_min_rational, BranchLimits, OptError, SolveResult};
use crate::matrix::{inverse, rref, DenseMatrix};
use crate::rings::CoefficientRing;
use crate::smith::{smith_normal_form, Smith};
use crate::words::{letter_name, GroupWord, Letter, NormalFormStrategy, Presentation, WordError, WordProblem};
use crate::{Int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FillError {
    #[error("NotACycle: the chain has nonzero boundary")]
    NotACycle,
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Word(#[from] WordError),
}

impl FillError {
    /// Short error name for diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            FillError::NotACycle => "NotACycle",
            FillError::Opt(OptError::Overflow(_)) | FillError::Complex(ComplexError::Overflow(_)) => "Overflow",
            FillError::Opt(OptError::DimensionMismatch(_)) => "DimensionMismatch",
            FillError::Complex(ComplexError::Syntax { .. }) => "SyntaxError",
            FillError::Complex(ComplexError::Boundary { .. }) => "BoundaryError",
            FillError::Complex(ComplexError::UnknownEdge(_)) => "UnknownEdge",
            FillError::Complex(ComplexError::Word(e)) | FillError::Word(e) => word_error_name(e),
        }
    }
}

fn word_error_name(e: &WordError) -> &'static str {
    match e {
        WordError::Syntax { .. } => "SyntaxError",
        WordError::UnknownGenerator { .. } => "UnknownGenerator",
        WordError::RadiusExceeded { .. } => "RadiusExceeded",
        WordError::RewriteBudgetExceeded(_) => "RewriteBudgetExceeded",
        WordError::InvalidStrategy(_) => "InvalidStrategy",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FillValue {
    Finite(Rational),
    Unfillable,
}

impl FillValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            FillValue::Finite(v) => Some(v),
            FillValue::Unfillable => None,
        }
    }

    pub fn is_unfillable(&self) -> bool {
        matches!(self, FillValue::Unfillable)
    }
}

impl fmt::Display for FillValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillValue::Finite(v) => write!(f, "{}/{}", v.numer(), v.denom()),
            FillValue::Unfillable => f.write_str("Unfillable"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillResult {
    pub value: FillValue,
    /// 2-chain with `d2·witness = γ`
    pub witness: Option<Chain>,
    /// `false` when the value is only an upper bound, or when unfillability
    /// was not certified
    pub exact: bool,
    pub ring: CoefficientRing,
    /// ℤ_S only
    pub search_bound: Option<u64>,
    /// the unit `m` with `m·witness` integral (ℤ and ℤ_S)
    pub multiplier: Option<u64>,
    /// minimal rational filling, a lower bound for every subring
    pub lower_bound: Option<Rational>,
}

/// Per-complex filling solver. The rank of `d2` is computed once; when `d2`
/// is injective every fillable cycle has exactly one rational filling and it
/// is read off a cached left inverse.
pub struct Filler<'a> {
    complex: &'a CayleyBall,
    d2q: DenseMatrix<Rational>,
    rank: usize,
    unique: Option<UniqueSolver>,
    smith: OnceLock<Smith<Int>>,
    d2z: OnceLock<DenseMatrix<Int>>,
    limits: BranchLimits,
}

struct UniqueSolver {
    rows: Vec<usize>,
    inverse: DenseMatrix<Rational>,
}

impl<'a> Filler<'a> {
    pub fn new(complex: &'a CayleyBall) -> Self {
        let d2q = complex.d2.to_dense_rational();
        let rows = rref(&d2q.transpose()).pivots;
        let rank = rows.len();
        let unique = (rank == d2q.cols()).then(|| {
            let sub = DenseMatrix::from_fn(rank, rank, |i, j| d2q[(rows[i], j)].clone());
            let inverse = inverse(&sub).expect("pivot rows of d2 are independent");
            UniqueSolver { rows, inverse }
        });
        Filler {
            complex,
            d2q,
            rank,
            unique,
            smith: OnceLock::new(),
            d2z: OnceLock::new(),
            limits: BranchLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: BranchLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn complex(&self) -> &CayleyBall {
        self.complex
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_injective(&self) -> bool {
        self.unique.is_some()
    }

    fn unique_solution(&self, solver: &UniqueSolver, g: &[Rational]) -> Option<Vec<Rational>> {
        let n = self.d2q.cols();
        let mut x = vec![Rational::zero(); n];
        for (j, &r) in solver.rows.iter().enumerate() {
            if g[r].is_zero() {
                continue;
            }
            for (i, xi) in x.iter_mut().enumerate() {
                let a = &solver.inverse[(i, j)];
                if !a.is_zero() {
                    *xi += a * &g[r];
                }
            }
        }
        (self.complex.d2.mul_rational(&x) == g).then_some(x)
    }

    fn d2z(&self) -> &DenseMatrix<Int> {
        self.d2z.get_or_init(|| self.complex.d2.to_dense_int())
    }

    /// Least `m > 0` such that `d2·x = m·γ` has an integer solution.
    fn smith_multiplier(&self, gamma: &[Int]) -> Int {
        let s = self.smith.get_or_init(|| smith_normal_form(self.d2z()));
        let y = s.u.mul_vec(gamma);
        let mut m0 = Int::one();
        for (i, yi) in y.iter().enumerate() {
            match s.diagonal.get(i) {
                Some(d) if !d.is_zero() => m0 = m0.lcm(&(d / d.gcd(yi))),
                _ => {}
            }
        }
        m0
    }

    /// Minimal ℓ1 filling of the integral cycle `γ` with coefficients in `ring`.
    ///
    /// Over ℤ_S the infimum `min_m fill_ℤ(m·γ)/m` is searched over S-units
    /// `m ≤ search_bound`.
    pub fn fill(
        &self,
        gamma: &[(usize, i64)],
        ring: &CoefficientRing,
        search_bound: u64,
    ) -> Result<FillResult, FillError> {
        if !self.complex.is_cycle(gamma) {
            return Err(FillError::NotACycle);
        }
        let edges = self.complex.edges.len();
        let cells = self.complex.cells.len();
        let sb = matches!(ring, CoefficientRing::Localization(_)).then_some(search_bound);
        let result = |value, witness, exact, multiplier, lower_bound| FillResult {
            value,
            witness,
            exact,
            ring: ring.clone(),
            search_bound: sb,
            multiplier,
            lower_bound,
        };
        let integral_ring = !matches!(ring, CoefficientRing::Rationals);
        if gamma.is_empty() {
            let m = integral_ring.then_some(1);
            return Ok(result(
                FillValue::Finite(Rational::zero()),
                Some(Chain::zero(2)),
                true,
                m,
                Some(Rational::zero()),
            ));
        }
        let g: Vec<Rational> = Chain::from_int(1, gamma).to_dense(edges);

        if let Some(solver) = &self.unique {
            let Some(x) = self.unique_solution(solver, &g) else {
                return Ok(result(FillValue::Unfillable, None, true, None, None));
            };
            let w = Chain::from_dense(2, &x);
            let value = w.l1_norm();
            if !integral_ring {
                return Ok(result(FillValue::Finite(value.clone()), Some(w), true, None, Some(value)));
            }
            let m0 = x.iter().fold(Int::one(), |acc, v| acc.lcm(v.denom()));
            if !ring.is_unit_integer(&m0) {
                return Ok(result(FillValue::Unfillable, None, true, None, Some(value)));
            }
            let within = matches!(ring, CoefficientRing::Integers) || m0 <= Int::from(search_bound);
            if !within {
                return Ok(result(FillValue::Unfillable, None, false, None, Some(value)));
            }
            return Ok(result(FillValue::Finite(value.clone()), Some(w), true, m0.to_u64(), Some(value)));
        }

        let lower = match l1_min_rational(&self.d2q, &g) {
            SolveResult::Optimal { value, witness } => (value, witness),
            _ => return Ok(result(FillValue::Unfillable, None, true, None, None)),
        };
        if !integral_ring {
            let w = Chain::from_dense(2, &lower.1);
            return Ok(result(FillValue::Finite(lower.0.clone()), Some(w), true, None, Some(lower.0)));
        }
        let gz: Vec<Int> = (0..edges).map(|i| g[i].to_integer()).collect();
        let m0 = self.smith_multiplier(&gz);
        if !ring.is_unit_integer(&m0) {
            return Ok(result(FillValue::Unfillable, None, true, None, Some(lower.0)));
        }
        let candidates: Vec<u64> = match ring {
            CoefficientRing::Integers => vec![1],
            _ => match m0.to_u64() {
                Some(m0) => ring.units_up_to(search_bound).into_iter().filter(|m| m % m0 == 0).collect(),
                None => vec![],
            },
        };
        let mut best: Option<(Rational, Vec<Rational>, u64)> = None;
        for m in candidates {
            let rhs: Vec<Int> = gz.iter().map(|v| v * Int::from(m)).collect();
            if let SolveResult::Optimal { value, witness } = l1_min_integral_with(self.d2z(), &rhs, self.limits)? {
                let scale = Rational::new(Int::one(), Int::from(m));
                let value = value * &scale;
                if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                    let x = witness.iter().map(|v| v * &scale).collect();
                    best = Some((value, x, m));
                }
                if best.as_ref().is_some_and(|(b, _, _)| *b == lower.0) {
                    break;
                }
            }
        }
        debug_assert!(cells == self.d2q.cols());
        Ok(match best {
            Some((value, x, m)) => {
                let exact = matches!(ring, CoefficientRing::Integers) || value == lower.0;
                result(FillValue::Finite(value), Some(Chain::from_dense(2, &x)), exact, Some(m), Some(lower.0))
            }
            None => result(FillValue::Unfillable, None, false, None, Some(lower.0)),
        })
    }
}

/// One-shot [`Filler::fill`].
pub fn fill_over(
    b: &CayleyBall,
    gamma: &[(usize, i64)],
    ring: &CoefficientRing,
    search_bound: u64,
) -> Result<FillResult, FillError> {
    Filler::new(b).fill(gamma, ring, search_bound)
}

/// Which cycles an FV table ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    /// every integral cycle of a finite complex
    Ball,
    /// connected cycles through the identity of a lazily explored Cayley
    /// graph, each filled on the subcomplex within `pad` of its support
    Anchored { pad: usize },
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Ball => f.write_str("ball"),
            Scope::Anchored { pad } => write!(f, "anchored:{pad}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FvOptions {
    pub k_max: usize,
    pub ring: CoefficientRing,
    pub search_bound: u64,
    /// integral part used: `lattice_scale ×` the integer cycle lattice
    pub lattice_scale: i64,
    pub cycle_limit: usize,
    pub limits: BranchLimits,
}

pub const DEFAULT_SEARCH_BOUND: u64 = 64;

impl FvOptions {
    pub fn new(k_max: usize, ring: CoefficientRing) -> Self {
        FvOptions {
            k_max,
            ring,
            search_bound: DEFAULT_SEARCH_BOUND,
            lattice_scale: 1,
            cycle_limit: DEFAULT_CYCLE_LIMIT,
            limits: BranchLimits::default(),
        }
    }

    pub fn lattice_scale(mut self, m: i64) -> Self {
        assert!(m > 0, "lattice scale must be positive");
        self.lattice_scale = m;
        self
    }

    pub fn search_bound(mut self, b: u64) -> Self {
        self.search_bound = b;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FVEntry {
    pub k: usize,
    pub value: Rational,
    /// `(edge label, coefficient)` of the maximizing cycle
    pub witness_cycle: Vec<(String, i64)>,
    pub ball_limited: bool,
    /// the value comes from a sum of separately filled cycles
    pub composite: bool,
    /// cycles of norm `<= k` without a filling in scope
    pub unfilled: usize,
}

impl FVEntry {
    /// The witness as an edge-index chain of `b`, when its labels name edges of `b`.
    pub fn witness_chain(&self, b: &CayleyBall) -> Option<IntChain> {
        self.witness_cycle.iter().map(|(name, c)| b.edge_by_name(name).map(|e| (e, *c))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct FVTable {
    pub entries: Vec<FVEntry>,
    pub radius: Option<usize>,
    pub ring: CoefficientRing,
    pub scope: Scope,
    pub lattice_scale: i64,
    pub search_bound: u64,
    /// connected cycles filled
    pub cycles: usize,
    /// every filling used was certified exact
    pub exact: bool,
}

impl FVTable {
    pub fn values(&self) -> Vec<(usize, Rational)> {
        self.entries.iter().map(|e| (e.k, e.value.clone())).collect()
    }

    pub fn value_at(&self, k: usize) -> Option<&Rational> {
        self.entries.iter().find(|e| e.k == k).map(|e| &e.value)
    }

    pub fn any_ball_limited(&self) -> bool {
        self.entries.iter().any(|e| e.ball_limited)
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    norm: usize,
    value: Option<Rational>,
    labels: Vec<(String, i64)>,
    limited: bool,
    exact: bool,
    composite: bool,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match (&self.value, &other.value) {
            (Some(a), Some(b)) => a > b || (a == b && other.limited && !self.limited),
            (Some(_), None) => true,
            _ => false,
        }
    }
}

/// FV² of a finite complex over `ring` for `k = 0..=k_max`.
pub fn fv2_estimate(b: &CayleyBall, k_max: usize, ring: CoefficientRing) -> Result<FVTable, FillError> {
    fv2_estimate_with(b, &FvOptions::new(k_max, ring))
}

pub fn fv2_estimate_with(b: &CayleyBall, opts: &FvOptions) -> Result<FVTable, FillError> {
    let scale = opts.lattice_scale;
    let base_k = opts.k_max / scale as usize;
    let cycles: Vec<IntChain> = connected_cycles(b, base_k, opts.cycle_limit)?
        .into_iter()
        .map(|c| c.into_iter().map(|(e, v)| (e, v * scale)).collect())
        .collect();
    let filler = Filler::new(b).with_limits(opts.limits);
    let fills: Vec<FillResult> =
        cycles.par_iter().map(|c| filler.fill(c, &opts.ring, opts.search_bound)).collect::<Result<_, _>>()?;
    let label = |c: &IntChain| c.iter().map(|&(e, v)| (b.edges[e].name.clone(), v)).collect::<Vec<_>>();
    let mut candidates: Vec<Candidate> = cycles
        .iter()
        .zip(&fills)
        .map(|(c, f)| Candidate {
            norm: int_chain_l1(c) as usize,
            value: f.value.finite().cloned(),
            labels: label(c),
            limited: f.witness.as_ref().is_some_and(|w| w.support().any(|cell| b.cell_near_boundary(cell))),
            exact: f.exact,
            composite: false,
        })
        .collect();

    let conn = running_best(&candidates, opts.k_max);
    let closure = superadditive_closure(&conn);
    if (0..=opts.k_max).any(|k| closure[k] > conn[k]) {
        let extra = disconnected_search(b, &filler, &cycles, &candidates, &conn, opts)?;
        candidates.extend(extra);
        candidates.sort_by_key(|c| c.norm);
    }
    let (entries, exact) = tabulate(&candidates, opts.k_max, b.radius.is_some());
    Ok(FVTable {
        entries,
        radius: b.radius,
        ring: opts.ring.clone(),
        scope: Scope::Ball,
        lattice_scale: scale,
        search_bound: opts.search_bound,
        cycles: cycles.len(),
        exact,
    })
}

/// Best finite value over candidates of norm `<= k`, for each `k`.
fn running_best(candidates: &[Candidate], k_max: usize) -> Vec<Rational> {
    let mut best = vec![Rational::zero(); k_max + 1];
    for c in candidates {
        if let Some(v) = &c.value {
            if c.norm <= k_max && *v > best[c.norm] {
                best[c.norm] = v.clone();
            }
        }
    }
    for k in 1..=k_max {
        if best[k - 1] > best[k] {
            best[k] = best[k - 1].clone();
        }
    }
    best
}

/// `B(k) = max(f(k), max_j B(j) + B(k-j))`.
fn superadditive_closure(f: &[Rational]) -> Vec<Rational> {
    let mut b = f.to_vec();
    for k in 1..b.len() {
        for j in 1..k {
            let s = &b[j] + &b[k - j];
            if s > b[k] {
                b[k] = s;
            }
        }
    }
    b
}

fn tabulate(candidates: &[Candidate], k_max: usize, truncated: bool) -> (Vec<FVEntry>, bool) {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| candidates[i].norm);
    let mut entries = Vec::with_capacity(k_max + 1);
    let mut best: Option<&Candidate> = None;
    let mut unfilled = 0;
    let mut exact = true;
    let mut next = 0;
    for k in 0..=k_max {
        while next < order.len() && candidates[order[next]].norm <= k {
            let c = &candidates[order[next]];
            next += 1;
            exact &= c.exact;
            if c.value.is_none() {
                unfilled += 1;
                continue;
            }
            if best.is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
        let entry = match best {
            Some(c) => FVEntry {
                k,
                value: c.value.clone().expect("only finite candidates are kept"),
                witness_cycle: c.labels.clone(),
                ball_limited: c.limited || (truncated && unfilled > 0),
                composite: c.composite,
                unfilled,
            },
            None => FVEntry {
                k,
                value: Rational::zero(),
                witness_cycle: vec![],
                ball_limited: truncated && unfilled > 0,
                composite: false,
                unfilled,
            },
        };
        entries.push(entry);
    }
    (entries, exact)
}

/// Sums of vertex-disjoint connected cycles whose component bound could
/// beat the connected maximum; each such sum is filled directly.
fn disconnected_search(
    b: &CayleyBall,
    filler: &Filler<'_>,
    cycles: &[IntChain],
    candidates: &[Candidate],
    conn: &[Rational],
    opts: &FvOptions,
) -> Result<Vec<Candidate>, FillError> {
    let closure = superadditive_closure(conn);
    let mut parts: Vec<usize> =
        (0..cycles.len()).filter(|&i| candidates[i].value.as_ref().is_some_and(|v| v.is_positive())).collect();
    parts.sort_by(|&i, &j| candidates[j].value.cmp(&candidates[i].value).then(i.cmp(&j)));
    let vertex_sets: HashMap<usize, Vec<usize>> = parts.iter().map(|&i| (i, b.chain_vertices(&cycles[i]))).collect();

    struct Search<'s, 'f> {
        b: &'s CayleyBall,
        filler: &'s Filler<'f>,
        cycles: &'s [IntChain],
        candidates: &'s [Candidate],
        conn: &'s [Rational],
        closure: &'s [Rational],
        parts: &'s [usize],
        vertex_sets: &'s HashMap<usize, Vec<usize>>,
        used: Vec<bool>,
        chosen: Vec<usize>,
        out: Vec<Candidate>,
        opts: &'s FvOptions,
    }

    impl Search<'_, '_> {
        fn promising(&self, norm: usize, sum: &Rational) -> bool {
            (norm..=self.opts.k_max).any(|n| sum + &self.closure[n - norm] > self.conn[n])
        }

        fn go(&mut self, from: usize, norm: usize, sum: Rational) -> Result<(), FillError> {
            if self.chosen.len() >= 2 && sum > self.conn[norm] {
                let mut chain: IntChain = self.chosen.iter().flat_map(|&i| self.cycles[i].iter().copied()).collect();
                chain.sort_unstable();
                let f = self.filler.fill(&chain, &self.opts.ring, self.opts.search_bound)?;
                if let Some(v) = f.value.finite() {
                    self.out.push(Candidate {
                        norm,
                        value: Some(v.clone()),
                        labels: chain.iter().map(|&(e, c)| (self.b.edges[e].name.clone(), c)).collect(),
                        limited: f.witness.as_ref().is_some_and(|w| w.support().any(|c| self.b.cell_near_boundary(c))),
                        exact: f.exact,
                        composite: false,
                    });
                }
            }
            for p in from..self.parts.len() {
                let i = self.parts[p];
                let c = &self.candidates[i];
                let n = norm + c.norm;
                if n > self.opts.k_max {
                    continue;
                }
                let s = &sum + c.value.as_ref().expect("parts have finite values");
                if !self.promising(n, &s) {
                    continue;
                }
                let vs = &self.vertex_sets[&i];
                if vs.iter().any(|&v| self.used[v]) {
                    continue;
                }
                vs.iter().for_each(|&v| self.used[v] = true);
                self.chosen.push(i);
                self.go(p + 1, n, s)?;
                self.chosen.pop();
                vs.iter().for_each(|&v| self.used[v] = false);
            }
            Ok(())
        }
    }

    let mut s = Search {
        b,
        filler,
        cycles,
        candidates,
        conn,
        closure: &closure,
        parts: &parts,
        vertex_sets: &vertex_sets,
        used: vec![false; b.vertex_count],
        chosen: vec![],
        out: vec![],
        opts,
    };
    s.go(0, 0, Rational::zero())?;
    Ok(s.out)
}

#[derive(Clone, Debug)]
pub struct AnchoredOptions {
    pub fv: FvOptions,
    /// word-length bound on explored vertices
    pub radius: usize,
    pub pad: usize,
}

pub const DEFAULT_PAD: usize = 2;

/// FV² estimate from connected cycles through the identity.
///
/// Every cycle of a Cayley complex is a translate of one through the
/// identity, so translation invariance lets the connected part of the
/// table be computed from those alone. Each cycle is filled on the
/// subcomplex spanned by vertices within `pad` of its support (and within
/// `radius` of the identity); the table is then closed under sums of
/// separately filled cycles.
pub fn fv2_anchored(wp: &WordProblem, opts: &AnchoredOptions) -> Result<FVTable, FillError> {
    let fv = &opts.fv;
    let scale = fv.lattice_scale;
    let base_k = fv.k_max / scale as usize;
    let mut g = CayleyGraph::new(wp.clone(), opts.radius);
    let cycles = anchored_cycles(&mut g, base_k, fv.cycle_limit)?;
    let names = wp.presentation().generator_names.clone();

    let mut patches = Vec::with_capacity(cycles.len());
    for c in &cycles {
        patches.push(build_patch(&mut g, c, opts.pad)?);
    }
    let fills: Vec<(FillResult, bool)> = cycles
        .par_iter()
        .zip(&patches)
        .map(|(c, patch)| {
            let local: IntChain = c.iter().map(|&(e, v)| (patch.edge_of[&e], v * scale)).collect();
            let mut local = local;
            local.sort_unstable();
            let f = Filler::new(&patch.complex).with_limits(fv.limits).fill(&local, &fv.ring, fv.search_bound)?;
            let limited = f.witness.as_ref().is_some_and(|w| {
                w.support().any(|cell| {
                    patch.complex.cell_near_boundary(cell)
                        || patch.complex.cell_vertices(cell).iter().any(|&v| !patch.inner[v])
                })
            });
            Ok((f, limited))
        })
        .collect::<Result<_, FillError>>()?;

    let label = |c: &LazyChain| -> Vec<(String, i64)> {
        c.iter()
            .map(|&((v, gen), x)| (format!("{}.{}", word_label(g.word(v), &names), names[gen]), x * scale))
            .collect()
    };
    let candidates: Vec<Candidate> = cycles
        .iter()
        .zip(&fills)
        .map(|(c, (f, limited))| Candidate {
            norm: lazy_l1(c) as usize * scale as usize,
            value: f.value.finite().cloned(),
            labels: label(c),
            limited: *limited,
            exact: f.exact,
            composite: false,
        })
        .collect();
    let (mut entries, exact) = tabulate(&candidates, fv.k_max, true);
    close_entries(&mut entries);
    let exact = exact && !entries.iter().any(|e| e.composite);
    Ok(FVTable {
        entries,
        radius: Some(opts.radius),
        ring: fv.ring.clone(),
        scope: Scope::Anchored { pad: opts.pad },
        lattice_scale: scale,
        search_bound: fv.search_bound,
        cycles: cycles.len(),
        exact,
    })
}

fn word_label(w: &GroupWord, names: &[String]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.letters().iter().map(|&l| letter_name(l, names)).collect()
}

/// Raises each entry to `max_j FV(j) + FV(k-j)` where that is larger.
fn close_entries(entries: &mut [FVEntry]) {
    for k in 1..entries.len() {
        for j in 1..k {
            let s = &entries[j].value + &entries[k - j].value;
            if s > entries[k].value {
                let mut witness = entries[j].witness_cycle.clone();
                witness.extend(entries[k - j].witness_cycle.iter().cloned());
                let limited = entries[j].ball_limited || entries[k - j].ball_limited;
                let e = &mut entries[k];
                e.value = s;
                e.witness_cycle = witness;
                e.ball_limited = limited;
                e.composite = true;
            }
        }
    }
}

struct Patch {
    complex: CayleyBall,
    edge_of: HashMap<(usize, usize), usize>,
    /// local vertices within `pad - 1` of the cycle
    inner: Vec<bool>,
}

fn build_patch(g: &mut CayleyGraph, c: &LazyChain, pad: usize) -> Result<Patch, FillError> {
    let letters_of = |((v, gen), _): &((usize, usize), i64)| (*v, *gen);
    let mut support = Vec::new();
    for e in c {
        let (v, gen) = letters_of(e);
        let t = g.step(v, gen as Letter + 1)?.expect("cycle edges lie in the graph");
        support.extend([v, t]);
    }
    support.sort_unstable();
    support.dedup();
    let vertices = g.neighborhood(&support, pad)?;
    let inner_ids = if pad == 0 { vec![] } else { g.neighborhood(&support, pad - 1)? };
    let complex = g.subcomplex(&vertices)?;
    let local: HashMap<GroupWord, usize> = complex.vertices.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let inner_set: std::collections::HashSet<usize> = inner_ids.iter().map(|&v| local[g.word(v)]).collect();
    let inner = (0..complex.vertex_count).map(|v| inner_set.contains(&v)).collect();
    let by_key: HashMap<(usize, usize), usize> =
        complex.edges.iter().enumerate().map(|(i, e)| ((e.source, e.generator.expect("Cayley edge")), i)).collect();
    let edge_of = c
        .iter()
        .map(|e| {
            let (v, gen) = letters_of(e);
            ((v, gen), by_key[&(local[g.word(v)], gen)])
        })
        .collect();
    Ok(Patch { complex, edge_of, inner })
}

/// One row of the integral-part demonstration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemoRow {
    pub n: usize,
    /// ℓ1 norm of `aₙ = (1/4n)·[xⁿ yⁿ x⁻ⁿ y⁻ⁿ]`
    pub l1: Rational,
    /// minimal rational filling of `aₙ`
    pub fill_q: Rational,
    /// minimal filling of the integral loop itself
    pub loop_fill: Rational,
}

/// The cycles `aₙ` in ℤ²: norm 1 for every `n` but filling norm `n/4`.
pub fn rational_cycle_demo(n: usize) -> Result<DemoRow, FillError> {
    assert!(n >= 1, "rational_cycle_demo needs n >= 1");
    let wp = WordProblem::new(&Presentation::z2(), NormalFormStrategy::Abelian)?;
    let ball = build_ball(&wp, 2 * n + 1)?;
    let id = ball.vertex_of(&GroupWord::identity()).expect("identity lies in the ball");
    let letters: Vec<Letter> = [1, 2, -1, -2].iter().flat_map(|&l| std::iter::repeat_n(l, n)).collect();
    let (loop_chain, end) = ball.path_chain(id, &letters).expect("the loop stays in the ball");
    assert_eq!(end, id);
    let scale = Rational::new(Int::one(), Int::from(4 * n));
    let a_n = Chain::from_int(1, &loop_chain).scale(&scale);
    let f = fill_over(&ball, &loop_chain, &CoefficientRing::Rationals, 0)?;
    let loop_fill = f.value.finite().cloned().expect("loops in ℤ² bound");
    Ok(DemoRow { n, l1: a_n.l1_norm(), fill_q: &loop_fill * &scale, loop_fill })
}

/// How [`preceq_witness`] reads `g` at arguments it was not sampled at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Extension {
    /// the value at the largest sampled argument not exceeding the query
    #[default]
    LastValue,
    /// zero outside the sampled arguments
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreceqReport {
    pub constant: Option<u64>,
    /// finite samples never certify `⪯` for all `k`
    pub range_limited: bool,
    /// the accepted constant read `g` at unsampled arguments
    pub extended: bool,
}

/// Smallest `C <= c_max` with `f(k) <= C·g(Ck+C) + Ck + C` on every sample of `f`.
pub fn preceq_witness(f: &[(usize, Rational)], g: &[(usize, Rational)], c_max: u64) -> PreceqReport {
    preceq_witness_with(f, g, c_max, Extension::LastValue)
}

pub fn preceq_witness_with(
    f: &[(usize, Rational)],
    g: &[(usize, Rational)],
    c_max: u64,
    ext: Extension,
) -> PreceqReport {
    let mut g_sorted = g.to_vec();
    g_sorted.sort_by_key(|p| p.0);
    let lookup = |x: usize| -> (Rational, bool) {
        match g_sorted.binary_search_by_key(&x, |p| p.0) {
            Ok(i) => (g_sorted[i].1.clone(), false),
            Err(i) => match ext {
                Extension::Zero => (Rational::zero(), true),
                Extension::LastValue if i == 0 => (Rational::zero(), true),
                Extension::LastValue => (g_sorted[i - 1].1.clone(), true),
            },
        }
    };
    for c in 1..=c_max {
        let cq = Rational::from_integer(c.into());
        let mut extended = false;
        let ok = f.iter().all(|(k, fk)| {
            let x = c as usize * k + c as usize;
            let (gx, e) = lookup(x);
            extended |= e;
            let rhs = &cq * gx + Rational::from_integer(x.into());
            *fk <= rhs
        });
        if ok {
            return PreceqReport { constant: Some(c), range_limited: true, extended };
        }
    }
    PreceqReport { constant: None, range_limited: true, extended: false }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearityVerdict {
    ConsistentWithLinear,
    Superlinear,
    Inconclusive,
}

impl fmt::Display for LinearityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearityVerdict::ConsistentWithLinear => "ConsistentWithLinear",
            LinearityVerdict::Superlinear => "Superlinear",
            LinearityVerdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearityReport {
    pub verdict: LinearityVerdict,
    /// `max value/k` over the entries with `k > 0`
    pub slope_bound: Rational,
}

/// Heuristic growth verdict for an FV table; evidence only.
pub fn linearity_probe(t: &FVTable) -> LinearityReport {
    linearity_probe_points(&t.values())
}

/// Superlinear: the last three or more record values (each positive and
/// above all earlier values) have strictly increasing `value/k` and non-decreasing,
/// eventually larger, secant slopes. Consistent with linear: on the upper
/// half of the range `value/k` never increases after its maximum, and that
/// maximum is not at the last sample (or everything is zero).
pub fn linearity_probe_points(points: &[(usize, Rational)]) -> LinearityReport {
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    let ratio = |(k, v): &(usize, Rational)| v / Rational::from_integer((*k).into());
    let slope_bound =
        pts.iter().filter(|p| p.0 > 0).map(ratio).max().unwrap_or_else(Rational::zero).max(Rational::zero());

    let mut records: Vec<&(usize, Rational)> = Vec::new();
    let mut top = Rational::zero();
    for p in &pts {
        if p.1 > top {
            top = p.1.clone();
            records.push(p);
        }
    }
    let slope =
        |a: &(usize, Rational), b: &(usize, Rational)| (&b.1 - &a.1) / Rational::from_integer((b.0 - a.0).into());
    let mut run = records.len().min(1);
    while run < records.len() {
        let i = records.len() - run - 1;
        let ok_ratio = records[i].0 > 0 && ratio(records[i]) < ratio(records[i + 1]);
        let ok_slope =
            i + 2 >= records.len() || slope(records[i], records[i + 1]) <= slope(records[i + 1], records[i + 2]);
        if !(ok_ratio && ok_slope) {
            break;
        }
        run += 1;
    }
    if run >= 3 {
        let tail = &records[records.len() - run..];
        let first = slope(tail[0], tail[1]);
        let last = slope(tail[run - 2], tail[run - 1]);
        if last > first {
            return LinearityReport { verdict: LinearityVerdict::Superlinear, slope_bound };
        }
    }

    let k_max = pts.last().map_or(0, |p| p.0);
    let upper: Vec<Rational> = pts.iter().filter(|p| p.0 > 0 && 2 * p.0 >= k_max).map(ratio).collect();
    let verdict = if upper.len() < 2 {
        LinearityVerdict::Inconclusive
    } else if upper.iter().all(Zero::is_zero) {
        LinearityVerdict::ConsistentWithLinear
    } else {
        let max = upper.iter().max().expect("nonempty");
        let at = upper.iter().position(|r| r == max).expect("max is attained");
        let falling = upper[at..].windows(2).all(|w| w[1] <= w[0]);
        if falling && at + 1 < upper.len() {
            LinearityVerdict::ConsistentWithLinear
        } else {
            LinearityVerdict::Inconclusive
        }
    };
    LinearityReport { verdict, slope_bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{cycle_lattice_basis, enumerate_integral_cycles, load_complex};
    use crate::rational::{int, rational};
    use crate::rings::make_localization;

    const RP2: &str = "vertices: 1\nedge e 0 0\ncell f e:2\n";

    fn z2_ball(r: usize) -> CayleyBall {
        let wp = WordProblem::new(&Presentation::z2(), NormalFormStrategy::Abelian).unwrap();
        build_ball(&wp, r).unwrap()
    }

    fn pts(v: &[(usize, i64)]) -> Vec<(usize, Rational)> {
        v.iter().map(|&(k, x)| (k, int(x))).collect()
    }

    #[test]
    fn zero_cycle_fills_with_zero() {
        let b = z2_ball(2);
        for ring in [CoefficientRing::Integers, CoefficientRing::Rationals, make_localization(&[2]).unwrap()] {
            let f = fill_over(&b, &[], &ring, 4).unwrap();
            assert_eq!(f.value, FillValue::Finite(int(0)));
            assert!(f.exact && f.witness.unwrap().is_zero());
        }
    }

    #[test]
    fn unit_square_fills_with_one_cell() {
        let b = z2_ball(2);
        let f = Filler::new(&b);
        assert!(f.is_injective());
        for c in &b.cells {
            let r = f.fill(&c.boundary, &CoefficientRing::Integers, 0).unwrap();
            assert_eq!(r.value, FillValue::Finite(int(1)));
            let ilp = l1_min_integral_with(
                f.d2z(),
                &Chain::from_int(1, &c.boundary)
                    .to_dense(b.edges.len())
                    .iter()
                    .map(|v| v.to_integer())
                    .collect::<Vec<_>>(),
                BranchLimits::default(),
            )
            .unwrap();
            assert_eq!(ilp.value(), Some(&int(1)));
        }
    }

    #[test]
    fn rp2_ring_separation() {
        let c = load_complex(RP2).unwrap();
        let e = vec![(0, 1)];
        let z = fill_over(&c, &e, &CoefficientRing::Integers, 0).unwrap();
        assert!(z.value.is_unfillable() && z.exact);
        let q = fill_over(&c, &e, &CoefficientRing::Rationals, 0).unwrap();
        assert_eq!(q.value, FillValue::Finite(rational(1, 2)));
        let z2 = fill_over(&c, &e, &make_localization(&[2]).unwrap(), 2).unwrap();
        assert_eq!(z2.value, FillValue::Finite(rational(1, 2)));
        assert!(z2.exact);
        assert_eq!(z2.multiplier, Some(2));
        let z2_small = fill_over(&c, &e, &make_localization(&[2]).unwrap(), 1).unwrap();
        assert!(z2_small.value.is_unfillable() && !z2_small.exact);
        let z3 = fill_over(&c, &e, &make_localization(&[3]).unwrap(), 81).unwrap();
        assert!(z3.value.is_unfillable() && z3.exact);
    }

    #[test]
    fn non_injective_paths_agree() {
        // two cells with the same boundary plus a doubled one: d2 is not injective
        let text = "vertices: 1\nedge e 0 0\ncell f e:2\ncell g e:2\ncell h e:3\n";
        let c = load_complex(text).unwrap();
        let f = Filler::new(&c);
        assert!(!f.is_injective());
        let e = vec![(0, 1)];
        let q = f.fill(&e, &CoefficientRing::Rationals, 0).unwrap();
        assert_eq!(q.value, FillValue::Finite(rational(1, 3)));
        let z = f.fill(&e, &CoefficientRing::Integers, 0).unwrap();
        // 3 - 2 = 1
        assert_eq!(z.value, FillValue::Finite(int(2)));
        assert!(z.exact);
        let z2 = f.fill(&e, &make_localization(&[2]).unwrap(), 8).unwrap();
        // 8 = 2·1 + 3·2
        assert_eq!(z2.value, FillValue::Finite(rational(3, 8)));
        assert_eq!(z2.multiplier, Some(8));
        assert!(!z2.exact, "3/8 is above the rational bound 1/3");
        let z3 = f.fill(&e, &make_localization(&[3]).unwrap(), 3).unwrap();
        assert_eq!(z3.value, FillValue::Finite(rational(1, 3)));
        assert!(z3.exact);
        let torus = load_complex("vertices: 1\nedge a 0 0\nedge b 0 0\ncell t a:1 b:1 a:-1 b:-1\n").unwrap();
        let r = fill_over(&torus, &[(0, 1)], &CoefficientRing::Rationals, 0).unwrap();
        assert!(r.value.is_unfillable() && r.exact);
    }

    #[test]
    fn rejects_non_cycles() {
        let b = z2_ball(1);
        assert_eq!(fill_over(&b, &[(0, 1)], &CoefficientRing::Rationals, 0), Err(FillError::NotACycle));
    }

    #[test]
    fn witnesses_are_fillings() {
        let b = z2_ball(3);
        let f = Filler::new(&b);
        for c in connected_cycles(&b, 8, usize::MAX).unwrap() {
            for ring in [CoefficientRing::Integers, CoefficientRing::Rationals] {
                let r = f.fill(&c, &ring, 0).unwrap();
                let w = r.witness.unwrap();
                let image = b.d2.mul_rational(&w.to_dense(b.cells.len()));
                assert_eq!(image, Chain::from_int(1, &c).to_dense(b.edges.len()));
                assert_eq!(r.value.finite().unwrap(), &w.l1_norm());
                assert!(w.terms().all(|(_, v)| ring.contains(v)));
            }
        }
    }

    #[test]
    fn free_group_table_is_zero() {
        let wp =
            WordProblem::new(&Presentation::free(2), NormalFormStrategy::BoundedEnumeration { radius: 3 }).unwrap();
        let b = build_ball(&wp, 3).unwrap();
        let t = fv2_estimate(&b, 8, CoefficientRing::Integers).unwrap();
        assert!(t.entries.iter().all(|e| e.value.is_zero()));
        let p = linearity_probe(&t);
        assert_eq!(p.verdict, LinearityVerdict::ConsistentWithLinear);
        assert_eq!(p.slope_bound, int(0));
    }

    #[test]
    fn z2_small_table() {
        let b = z2_ball(4);
        let t = fv2_estimate(&b, 8, CoefficientRing::Integers).unwrap();
        let v: Vec<i64> = t.entries.iter().map(|e| e.value.to_integer().to_i64().unwrap()).collect();
        assert_eq!(v, vec![0, 0, 0, 0, 1, 1, 2, 2, 4]);
        for e in &t.entries {
            let c = e.witness_chain(&b).unwrap();
            assert!(b.is_cycle(&c) && int_chain_l1(&c) as usize <= e.k);
        }
        assert!(!t.entries[8].ball_limited);
    }

    #[test]
    fn ball_table_matches_lattice_enumeration() {
        let b = z2_ball(3);
        let l = cycle_lattice_basis(&b);
        let filler = Filler::new(&b);
        let t = fv2_estimate(&b, 8, CoefficientRing::Rationals).unwrap();
        for k in 0..=8 {
            let brute = enumerate_integral_cycles(&l, k, usize::MAX)
                .unwrap()
                .iter()
                .map(|c| filler.fill(c, &CoefficientRing::Rationals, 0).unwrap().value.finite().unwrap().clone())
                .max()
                .unwrap();
            assert_eq!(t.entries[k].value, brute, "k = {k}");
        }
    }

    #[test]
    fn disconnected_sums_are_found() {
        // fill_ℤ(a) = 2 (3 - 2) but fill_ℤ(2a) = 1, so two disjoint copies beat any connected cycle
        let one = "vertices: 1\nedge a 0 0\ncell p a:2\ncell q a:3\n";
        let two = "vertices: 2\nedge a 0 0\nedge b 1 1\ncell p a:2\ncell q a:3\ncell r b:2\ncell s b:3\n";
        let t1 = fv2_estimate(&load_complex(one).unwrap(), 2, CoefficientRing::Integers).unwrap();
        assert_eq!(t1.values(), pts(&[(0, 0), (1, 2), (2, 2)]));
        let c2 = load_complex(two).unwrap();
        let t2 = fv2_estimate(&c2, 2, CoefficientRing::Integers).unwrap();
        assert_eq!(t2.values(), pts(&[(0, 0), (1, 2), (2, 4)]));
        assert_eq!(t2.entries[2].witness_chain(&c2).unwrap().len(), 2);
    }

    #[test]
    fn unfillable_cycles_are_counted() {
        let c = load_complex(RP2).unwrap();
        let t = fv2_estimate(&c, 2, CoefficientRing::Integers).unwrap();
        assert_eq!(t.entries[1].unfilled, 2);
        assert_eq!(t.values(), pts(&[(0, 0), (1, 0), (2, 1)]));
        let q = fv2_estimate(&c, 2, CoefficientRing::Rationals).unwrap();
        assert_eq!(q.entries[1].value, rational(1, 2));
    }

    #[test]
    fn scaled_lattice_doubles_values() {
        let b = z2_ball(4);
        let t = fv2_estimate_with(&b, &FvOptions::new(8, CoefficientRing::Integers).lattice_scale(2)).unwrap();
        assert_eq!(t.values(), pts(&[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (6, 0), (7, 0), (8, 2)]));
    }

    #[test]
    fn anchored_matches_ball_on_z2() {
        let wp = WordProblem::new(&Presentation::z2(), NormalFormStrategy::Abelian).unwrap();
        let opts = AnchoredOptions { fv: FvOptions::new(10, CoefficientRing::Integers), radius: 8, pad: DEFAULT_PAD };
        let a = fv2_anchored(&wp, &opts).unwrap();
        let b = fv2_estimate(&z2_ball(6), 10, CoefficientRing::Integers).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn surface_anchored_table() {
        let wp = WordProblem::new(&Presentation::surface(2), NormalFormStrategy::Dehn).unwrap();
        let opts = AnchoredOptions { fv: FvOptions::new(10, CoefficientRing::Rationals), radius: 8, pad: DEFAULT_PAD };
        let t = fv2_anchored(&wp, &opts).unwrap();
        let expected: Vec<i64> = (0..=10).map(|k| i64::from(k >= 8)).collect();
        assert_eq!(t.values(), (0..=10).zip(expected).map(|(k, v)| (k, int(v))).collect::<Vec<_>>());
        assert!(t.exact);
    }

    #[test]
    fn demo_rows() {
        for n in 1..=2 {
            let r = rational_cycle_demo(n).unwrap();
            assert_eq!(r.l1, int(1));
            assert_eq!(r.fill_q, rational(n as i64, 4));
            assert_eq!(r.loop_fill, int((n * n) as i64));
        }
    }

    #[test]
    fn preceq_examples() {
        let f: Vec<(usize, Rational)> = (0..=10).map(|k| (k, int((k * k) as i64))).collect();
        let g: Vec<(usize, Rational)> = (0..=10).map(|k| (k, int(k as i64))).collect();
        assert_eq!(preceq_witness(&g, &g, 12).constant, Some(1));
        let last = preceq_witness(&f, &g, 12);
        assert_eq!(last.constant, Some(5));
        assert!(last.range_limited && last.extended);
        assert_eq!(preceq_witness_with(&f, &g, 12, Extension::Zero).constant, Some(10));
        let zero: Vec<(usize, Rational)> = (0..=10).map(|k| (k, int(0))).collect();
        assert_eq!(preceq_witness(&f, &zero, 5).constant, None);
    }

    #[test]
    fn linearity_examples() {
        let z2 = linearity_probe_points(&pts(&[(4, 1), (8, 4), (12, 9)]));
        assert_eq!(z2.verdict, LinearityVerdict::Superlinear);
        assert_eq!(z2.slope_bound, rational(3, 4));
        let full: Vec<(usize, i64)> = vec![
            (0, 0),
            (1, 0),
            (2, 0),
            (3, 0),
            (4, 1),
            (5, 1),
            (6, 2),
            (7, 2),
            (8, 4),
            (9, 4),
            (10, 6),
            (11, 6),
            (12, 9),
        ];
        assert_eq!(linearity_probe_points(&pts(&full)).verdict, LinearityVerdict::Superlinear);
        let surface: Vec<(usize, i64)> = (0..=12).map(|k| (k, i64::from(k >= 8))).collect();
        let s = linearity_probe_points(&pts(&surface));
        assert_eq!(s.verdict, LinearityVerdict::ConsistentWithLinear);
        assert_eq!(s.slope_bound, rational(1, 8));
        let zeros: Vec<(usize, i64)> = (0..=6).map(|k| (k, 0)).collect();
        assert_eq!(linearity_probe_points(&pts(&zeros)).verdict, LinearityVerdict::ConsistentWithLinear);
        let linear: Vec<(usize, i64)> = (0..=6).map(|k| (k, k as i64)).collect();
        assert_eq!(linearity_probe_points(&pts(&linear)).verdict, LinearityVerdict::ConsistentWithLinear);
        let late = pts(&[(0, 0), (2, 0), (4, 0), (6, 1)]);
        assert_eq!(linearity_probe_points(&late).verdict, LinearityVerdict::Inconclusive);
    }
}
