//! Finite chain complexes of based free modules, chain maps, the algebraic
//! mapping cylinder, homology ranks, and split checks for subcomplexes.

use serde::{Deserialize, Serialize};

use crate::matrix::{inverse, rank, rref, DenseMatrix};
use crate::rings::CoefficientRing;
use crate::scalar::Field;
use crate::smith::smith_normal_form;
use crate::{Int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotAComplex: d∘d != 0 at degree {degree}")]
    NotAComplex { degree: usize },
    #[error("NotAChainMap: the square at degree {degree} does not commute")]
    NotAChainMap { degree: usize },
    #[error("NotInjective: component at degree {degree} has a kernel")]
    NotInjective { degree: usize },
    #[error("NotInRing: an entry at degree {degree} lies outside {ring}")]
    NotInRing { degree: usize, ring: String },
    #[error("VerificationFailed: {0}")]
    VerificationFailed(String),
}

/// `… → C₂ → C₁ → C₀ → 0` with `Cᵢ` free of rank `ranks[i]`; `dᵢ: Cᵢ → Cᵢ₋₁`
/// is a `rank(i−1) × rank(i)` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainComplex<T> {
    ranks: Vec<usize>,
    /// `differentials[i - 1] = dᵢ`
    differentials: Vec<DenseMatrix<T>>,
}

impl<T: Field> ChainComplex<T> {
    /// `differentials` lists `d₁, d₂, …`, one fewer than `ranks`.
    pub fn new(ranks: Vec<usize>, differentials: Vec<DenseMatrix<T>>) -> Result<Self, ChainError> {
        if differentials.len() != ranks.len().saturating_sub(1) {
            return Err(ChainError::DimensionMismatch(format!(
                "{} differentials for {} degrees",
                differentials.len(),
                ranks.len()
            )));
        }
        for (i, d) in differentials.iter().enumerate() {
            if d.shape() != (ranks[i], ranks[i + 1]) {
                return Err(ChainError::DimensionMismatch(format!(
                    "d{} is {:?}, expected {:?}",
                    i + 1,
                    d.shape(),
                    (ranks[i], ranks[i + 1])
                )));
            }
        }
        for i in 1..differentials.len() {
            if !differentials[i - 1].mul(&differentials[i]).is_zero() {
                return Err(ChainError::NotAComplex { degree: i + 1 });
            }
        }
        Ok(ChainComplex { ranks, differentials })
    }

    pub fn zero() -> Self {
        ChainComplex { ranks: vec![], differentials: vec![] }
    }

    /// A single module of rank `r` in degree 0.
    pub fn concentrated(r: usize) -> Self {
        ChainComplex { ranks: vec![r], differentials: vec![] }
    }

    /// Number of stored degrees, `0..len()`.
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, i: usize) -> usize {
        self.ranks.get(i).copied().unwrap_or(0)
    }

    /// `dᵢ`, zero outside the stored range (and for `i = 0`).
    pub fn differential(&self, i: usize) -> DenseMatrix<T> {
        match i.checked_sub(1).and_then(|j| self.differentials.get(j)) {
            Some(d) => d.clone(),
            None => DenseMatrix::zeros(if i == 0 { 0 } else { self.rank(i - 1) }, self.rank(i)),
        }
    }

    /// `true` when every module is zero.
    pub fn is_zero_complex(&self) -> bool {
        self.ranks.iter().all(|&r| r == 0)
    }

    /// Exact `d∘d = 0` check.
    pub fn is_complex(&self) -> bool {
        (2..self.len()).all(|i| self.differential(i - 1).mul(&self.differential(i)).is_zero())
    }
}

/// Degree-wise matrices `fᵢ: Bᵢ → Cᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainMap<T> {
    source: ChainComplex<T>,
    target: ChainComplex<T>,
    components: Vec<DenseMatrix<T>>,
}

impl<T: Field> ChainMap<T> {
    /// Shapes are validated; commutativity is left to [`check_chain_map`].
    pub fn new(
        source: ChainComplex<T>,
        target: ChainComplex<T>,
        components: Vec<DenseMatrix<T>>,
    ) -> Result<Self, ChainError> {
        let n = source.len().max(target.len());
        let mut comps = components;
        if comps.len() > n {
            return Err(ChainError::DimensionMismatch(format!("{} components for {n} degrees", comps.len())));
        }
        while comps.len() < n {
            let i = comps.len();
            comps.push(DenseMatrix::zeros(target.rank(i), source.rank(i)));
        }
        for (i, f) in comps.iter().enumerate() {
            if f.shape() != (target.rank(i), source.rank(i)) {
                return Err(ChainError::DimensionMismatch(format!(
                    "f{i} is {:?}, expected {:?}",
                    f.shape(),
                    (target.rank(i), source.rank(i))
                )));
            }
        }
        Ok(ChainMap { source, target, components: comps })
    }

    pub fn identity(c: &ChainComplex<T>) -> Self {
        let comps = c.ranks.iter().map(|&r| DenseMatrix::identity(r)).collect();
        ChainMap { source: c.clone(), target: c.clone(), components: comps }
    }

    pub fn zero(source: &ChainComplex<T>, target: &ChainComplex<T>) -> Self {
        Self::new(source.clone(), target.clone(), vec![]).expect("zero components have the right shapes")
    }

    pub fn source(&self) -> &ChainComplex<T> {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex<T> {
        &self.target
    }

    pub fn component(&self, i: usize) -> DenseMatrix<T> {
        self.components.get(i).cloned().unwrap_or_else(|| DenseMatrix::zeros(self.target.rank(i), self.source.rank(i)))
    }

    pub fn components(&self) -> &[DenseMatrix<T>] {
        &self.components
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ChainMap<T>) -> Result<ChainMap<T>, ChainError> {
        if self.target.ranks != other.source.ranks {
            return Err(ChainError::DimensionMismatch("maps are not composable".into()));
        }
        let n = self.source.len().max(other.target.len());
        let comps = (0..n).map(|i| other.component(i).mul(&self.component(i))).collect();
        ChainMap::new(self.source.clone(), other.target.clone(), comps)
    }

    /// Degree-wise equality of components.
    pub fn same_components(&self, other: &ChainMap<T>) -> bool {
        let n = self.components.len().max(other.components.len());
        (0..n).all(|i| self.component(i) == other.component(i))
    }
}

/// `true` iff `d′ᵢ·fᵢ = fᵢ₋₁·dᵢ` in every degree.
pub fn check_chain_map<T: Field>(f: &ChainMap<T>) -> Result<bool, ChainError> {
    first_failing_square(f).map(|d| d.is_none())
}

fn first_failing_square<T: Field>(f: &ChainMap<T>) -> Result<Option<usize>, ChainError> {
    let n = f.source.len().max(f.target.len());
    for (i, c) in f.components.iter().enumerate() {
        if c.shape() != (f.target.rank(i), f.source.rank(i)) {
            return Err(ChainError::DimensionMismatch(format!("component {i} has shape {:?}", c.shape())));
        }
    }
    for i in 1..n {
        let left = f.target.differential(i).mul(&f.component(i));
        let right = f.component(i - 1).mul(&f.source.differential(i));
        if left != right {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The mapping cylinder of `f: B → C` with its structure maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder<T> {
    /// `Mᵢ = Cᵢ ⊕ Bᵢ ⊕ Bᵢ₋₁`
    pub m: ChainComplex<T>,
    pub incl_c: ChainMap<T>,
    pub incl_b: ChainMap<T>,
    /// `(c, b, b′) ↦ c + f(b)`
    pub kappa: ChainMap<T>,
}

/// Builds `M` with differential
///
/// ```text
///        ⎡ d′   0   −f ⎤
/// d″ =   ⎢ 0    d   Id ⎥
///        ⎣ 0    0   −d ⎦
/// ```
///
/// and checks `d″∘d″ = 0`, that the structure maps are chain maps,
/// `κ∘incl_C = id` and `κ∘incl_B = f` before returning.
pub fn mapping_cylinder<T: Field>(f: &ChainMap<T>) -> Result<Cylinder<T>, ChainError> {
    if let Some(degree) = first_failing_square(f)? {
        return Err(ChainError::NotAChainMap { degree });
    }
    let (b, c) = (&f.source, &f.target);
    let top = b.len().max(c.len());
    // B contributes a shifted copy up to degree top, so M lives in 0..=top
    let m_len = if b.is_zero_complex() { c.len() } else { top + 1 };
    let block = |i: usize| (c.rank(i), b.rank(i), if i == 0 { 0 } else { b.rank(i - 1) });
    let ranks: Vec<usize> = (0..m_len)
        .map(|i| {
            let (x, y, z) = block(i);
            x + y + z
        })
        .collect();

    let mut diffs = Vec::new();
    for i in 1..m_len {
        let (c1, b1, s1) = block(i);
        let (c0, b0, s0) = block(i - 1);
        let mut d = DenseMatrix::zeros(c0 + b0 + s0, c1 + b1 + s1);
        d.set_block(0, 0, &c.differential(i));
        d.set_block(0, c1 + b1, &f.component(i - 1).neg());
        d.set_block(c0, c1, &b.differential(i));
        d.set_block(c0, c1 + b1, &DenseMatrix::identity(b.rank(i - 1)));
        if i >= 2 {
            d.set_block(c0 + b0, c1 + b1, &b.differential(i - 1).neg());
        }
        diffs.push(d);
    }
    let m = ChainComplex::new(ranks, diffs)
        .map_err(|e| ChainError::VerificationFailed(format!("d″∘d″ = 0 failed: {e}")))?;

    let mut incl_c = Vec::new();
    let mut incl_b = Vec::new();
    let mut kappa = Vec::new();
    for i in 0..m_len {
        let (ci, bi, si) = block(i);
        let mut ic = DenseMatrix::zeros(ci + bi + si, ci);
        ic.set_block(0, 0, &DenseMatrix::identity(ci));
        incl_c.push(ic);
        let mut ib = DenseMatrix::zeros(ci + bi + si, bi);
        ib.set_block(ci, 0, &DenseMatrix::identity(bi));
        incl_b.push(ib);
        let mut k = DenseMatrix::zeros(ci, ci + bi + si);
        k.set_block(0, 0, &DenseMatrix::identity(ci));
        k.set_block(0, ci, &f.component(i));
        kappa.push(k);
    }
    let cyl = Cylinder {
        incl_c: ChainMap::new(c.clone(), m.clone(), incl_c)?,
        incl_b: ChainMap::new(b.clone(), m.clone(), incl_b)?,
        kappa: ChainMap::new(m.clone(), c.clone(), kappa)?,
        m,
    };
    verify_cylinder(f, &cyl)?;
    Ok(cyl)
}

fn verify_cylinder<T: Field>(f: &ChainMap<T>, cyl: &Cylinder<T>) -> Result<(), ChainError> {
    let fail = |what: &str| Err(ChainError::VerificationFailed(what.to_string()));
    if !cyl.m.is_complex() {
        return fail("d″∘d″ != 0");
    }
    for (name, map) in [("incl_C", &cyl.incl_c), ("incl_B", &cyl.incl_b), ("kappa", &cyl.kappa)] {
        if !check_chain_map(map)? {
            return fail(&format!("{name} is not a chain map"));
        }
    }
    if !cyl.incl_c.then(&cyl.kappa)?.same_components(&ChainMap::identity(&f.target)) {
        return fail("kappa∘incl_C != id");
    }
    if !cyl.incl_b.then(&cyl.kappa)?.same_components(f) {
        return fail("kappa∘incl_B != f");
    }
    Ok(())
}

/// `dim ker dᵢ − rank dᵢ₊₁` for each stored degree.
pub fn homology_ranks<T: Field>(c: &ChainComplex<T>) -> Vec<usize> {
    let ranks: Vec<usize> = (0..=c.len()).map(|i| rank(&c.differential(i))).collect();
    (0..c.len()).map(|i| c.rank(i) - ranks[i] - ranks[i + 1]).collect()
}

/// Homology ranks with trailing zeros removed, for comparing complexes of
/// different lengths.
pub fn trimmed_homology_ranks<T: Field>(c: &ChainComplex<T>) -> Vec<usize> {
    let mut h = homology_ranks(c);
    while h.last() == Some(&0) {
        h.pop();
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientReport<T> {
    /// `Sᵢ = Mᵢ / incl(Qᵢ)` on a complement of coordinate vectors
    pub quotient: ChainComplex<T>,
    /// coordinates of `Mᵢ` spanning the chosen complement
    pub complement: Vec<Vec<usize>>,
    pub splits: bool,
}

/// Quotient of `M` by the image of the injective chain map `incl: Q → M`.
/// Over a field every such sequence splits.
pub fn quotient_split_check<T: Field>(
    m: &ChainComplex<T>,
    incl: &ChainMap<T>,
) -> Result<QuotientReport<T>, ChainError> {
    if incl.target.ranks != m.ranks {
        return Err(ChainError::DimensionMismatch("incl must land in M".into()));
    }
    if let Some(degree) = first_failing_square(incl)? {
        return Err(ChainError::NotAChainMap { degree });
    }
    let n = m.len();
    let mut projections = Vec::with_capacity(n);
    let mut complement = Vec::with_capacity(n);
    let mut lifts = Vec::with_capacity(n);
    for i in 0..n {
        let a = incl.component(i);
        let (mi, qi) = a.shape();
        if rank(&a) != qi {
            return Err(ChainError::NotInjective { degree: i });
        }
        // greedy complement: coordinates independent of the image
        let aug = DenseMatrix::from_fn(mi, qi + mi, |r, cc| {
            if cc < qi {
                a[(r, cc)].clone()
            } else if cc - qi == r {
                T::one()
            } else {
                T::zero()
            }
        });
        let coords: Vec<usize> = rref(&aug).pivots.into_iter().filter(|&p| p >= qi).map(|p| p - qi).collect();
        let basis = DenseMatrix::from_fn(mi, mi, |r, cc| {
            if cc < qi {
                a[(r, cc)].clone()
            } else if coords[cc - qi] == r {
                T::one()
            } else {
                T::zero()
            }
        });
        let inv = inverse(&basis).expect("image plus complement is a basis");
        projections.push(inv.block(qi, mi, 0, mi));
        lifts.push(DenseMatrix::from_fn(mi, coords.len(), |r, cc| if coords[cc] == r { T::one() } else { T::zero() }));
        complement.push(coords);
    }
    let ranks: Vec<usize> = complement.iter().map(Vec::len).collect();
    let diffs: Vec<DenseMatrix<T>> =
        (1..n).map(|i| projections[i - 1].mul(&m.differential(i)).mul(&lifts[i])).collect();
    let quotient = ChainComplex::new(ranks, diffs)?;
    Ok(QuotientReport { quotient, complement, splits: true })
}

/// [`quotient_split_check`] with the split decided over a subring of ℚ:
/// `incl` must have entries in `ring`, and the sequence splits iff every
/// invariant factor of every component is a unit of `ring`.
pub fn quotient_split_check_over(
    m: &ChainComplex<Rational>,
    incl: &ChainMap<Rational>,
    ring: &CoefficientRing,
) -> Result<QuotientReport<Rational>, ChainError> {
    let mut report = quotient_split_check(m, incl)?;
    if matches!(ring, CoefficientRing::Rationals) {
        return Ok(report);
    }
    let mut splits = true;
    for (i, a) in incl.components.iter().enumerate() {
        let scale =
            ring.scaling_denominator(a).map_err(|_| ChainError::NotInRing { degree: i, ring: ring.to_string() })?;
        let q = Rational::from_integer(scale.clone());
        let scaled = a.map(|x| (x * &q).to_integer());
        // m·A = U⁻¹ D V⁻¹ with m a unit, so A splits iff D's factors are units
        let factors = smith_normal_form(&scaled).invariant_factors();
        splits &= factors.iter().all(|d| ring.is_unit_integer(d));
    }
    report.splits = splits;
    Ok(report)
}

/// `{"degrees": [{"rank": r, "differential": [[p/q, …], …]}, …]}`; the
/// differential of degree `i` is `dᵢ` (absent for degree 0).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub degrees: Vec<DegreeJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DegreeJson {
    pub rank: usize,
    #[serde(default, with = "crate::rational::pq_rows", skip_serializing_if = "Vec::is_empty")]
    pub differential: Vec<Vec<Rational>>,
}

/// A matrix as row-major `"p/q"` strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct MatrixJson(#[serde(with = "crate::rational::pq_rows")] pub Vec<Vec<Rational>>);

fn matrix_from_rows(
    rows: &[Vec<Rational>],
    r: usize,
    c: usize,
    what: &str,
) -> Result<DenseMatrix<Rational>, ChainError> {
    // an empty list stands for any zero-sized or all-zero block
    if rows.is_empty() {
        return Ok(DenseMatrix::zeros(r, c));
    }
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(ChainError::DimensionMismatch(format!("{what} must be {r}×{c}")));
    }
    Ok(DenseMatrix::from_rows(rows.to_vec(), c))
}

impl ComplexJson {
    pub fn to_complex(&self) -> Result<ChainComplex<Rational>, ChainError> {
        let ranks: Vec<usize> = self.degrees.iter().map(|d| d.rank).collect();
        let diffs = (1..ranks.len())
            .map(|i| matrix_from_rows(&self.degrees[i].differential, ranks[i - 1], ranks[i], &format!("d{i}")))
            .collect::<Result<_, _>>()?;
        ChainComplex::new(ranks, diffs)
    }

    pub fn from_complex(c: &ChainComplex<Rational>) -> Self {
        let degrees = (0..c.len())
            .map(|i| DegreeJson {
                rank: c.rank(i),
                differential: if i == 0 { vec![] } else { c.differential(i).to_rows() },
            })
            .collect();
        ComplexJson { degrees }
    }
}

/// Chain-map components as a list of matrices, degree 0 first.
pub fn map_from_json(
    source: &ChainComplex<Rational>,
    target: &ChainComplex<Rational>,
    components: &[MatrixJson],
) -> Result<ChainMap<Rational>, ChainError> {
    let comps = components
        .iter()
        .enumerate()
        .map(|(i, m)| matrix_from_rows(&m.0, target.rank(i), source.rank(i), &format!("f{i}")))
        .collect::<Result<_, _>>()?;
    ChainMap::new(source.clone(), target.clone(), comps)
}

pub fn map_to_json(f: &ChainMap<Rational>) -> Vec<MatrixJson> {
    f.components.iter().map(|m| MatrixJson(m.to_rows())).collect()
}

/// Exact integer matrix of an integral rational matrix.
pub fn integral_matrix(a: &DenseMatrix<Rational>) -> Option<DenseMatrix<Int>> {
    (0..a.rows()).all(|i| a.row(i).iter().all(|x| x.is_integer())).then(|| a.map(|x| x.to_integer()))
}

impl<T: Field> Cylinder<T> {
    /// Re-runs every identity checked at construction.
    pub fn verify(&self, f: &ChainMap<T>) -> bool {
        verify_cylinder(f, self).is_ok()
    }
}
