//! Truncated Cayley 2-complexes, explicitly listed 2-complexes, integer
//! boundary matrices, and the lattice of integral 1-cycles.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_traits::{Signed, ToPrimitive, Zero};

use crate::matrix::DenseMatrix;
use crate::smith::integer_kernel;
use crate::words::{GroupWord, Letter, WordError, WordProblem};
use crate::{Int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplexError {
    #[error("SyntaxError at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("BoundaryError: d1·d2 != 0 at vertex {vertex}, cell {cell}")]
    Boundary { vertex: usize, cell: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("Overflow: more than {0} integral cycles")]
    Overflow(usize),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
}

/// Sparse integer matrix stored by columns; each column is sorted by row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseIntMatrix {
    rows: usize,
    columns: Vec<Vec<(usize, i64)>>,
}

impl SparseIntMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<(usize, i64)>>) -> Self {
        let columns = columns.into_iter().map(normalize_chain).collect();
        SparseIntMatrix { rows, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, i64)] {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn mul_sparse(&self, x: &[(usize, i64)]) -> Vec<(usize, i64)> {
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for &(j, c) in x {
            for &(i, a) in &self.columns[j] {
                *acc.entry(i).or_default() += a * c;
            }
        }
        acc.into_iter().filter(|&(_, v)| v != 0).collect()
    }

    /// Product with a dense rational vector.
    pub fn mul_rational(&self, x: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.rows];
        for (j, xj) in x.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for &(i, a) in &self.columns[j] {
                out[i] += xj * Rational::from_integer(a.into());
            }
        }
        out
    }

    /// `true` iff `self · rhs` is the zero matrix.
    pub fn product_is_zero(&self, rhs: &SparseIntMatrix) -> Option<(usize, usize)> {
        for j in 0..rhs.cols() {
            if let Some(&(i, _)) = self.mul_sparse(rhs.column(j)).first() {
                return Some((i, j));
            }
        }
        None
    }

    pub fn to_dense_int(&self) -> DenseMatrix<Int> {
        let mut m = DenseMatrix::zeros(self.rows, self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, a) in col {
                m[(i, j)] = Int::from(a);
            }
        }
        m
    }

    pub fn to_dense_rational(&self) -> DenseMatrix<Rational> {
        let mut m = DenseMatrix::zeros(self.rows, self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, a) in col {
                m[(i, j)] = Rational::from_integer(a.into());
            }
        }
        m
    }
}

/// Sorts by index, merges duplicates and drops zeros.
pub fn normalize_chain(v: Vec<(usize, i64)>) -> Vec<(usize, i64)> {
    let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
    for (i, c) in v {
        *acc.entry(i).or_default() += c;
    }
    acc.into_iter().filter(|&(_, c)| c != 0).collect()
}

/// Integer chain as sorted `(cell index, coefficient)` pairs without zeros.
pub type IntChain = Vec<(usize, i64)>;

pub fn int_chain_l1(c: &[(usize, i64)]) -> i64 {
    c.iter().map(|&(_, v)| v.abs()).sum()
}

/// Sparse chain with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Chain {
    pub degree: usize,
    coefficients: BTreeMap<usize, Rational>,
}

impl Chain {
    pub fn zero(degree: usize) -> Self {
        Chain { degree, coefficients: BTreeMap::new() }
    }

    pub fn from_pairs(degree: usize, pairs: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut c = Chain::zero(degree);
        for (i, v) in pairs {
            c.add_term(i, v);
        }
        c
    }

    pub fn from_int(degree: usize, chain: &[(usize, i64)]) -> Self {
        Chain::from_pairs(degree, chain.iter().map(|&(i, v)| (i, Rational::from_integer(v.into()))))
    }

    pub fn from_dense(degree: usize, v: &[Rational]) -> Self {
        Chain::from_pairs(degree, v.iter().cloned().enumerate())
    }

    pub fn add_term(&mut self, i: usize, v: Rational) {
        if v.is_zero() {
            return;
        }
        let e = self.coefficients.entry(i).or_insert_with(Rational::zero);
        *e += v;
        if e.is_zero() {
            self.coefficients.remove(&i);
        }
    }

    pub fn get(&self, i: usize) -> Rational {
        self.coefficients.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.coefficients.iter().map(|(&i, v)| (i, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefficients.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn l1_norm(&self) -> Rational {
        self.coefficients.values().fold(Rational::zero(), |acc, v| acc + v.abs())
    }

    pub fn scale(&self, q: &Rational) -> Chain {
        Chain::from_pairs(self.degree, self.coefficients.iter().map(|(&i, v)| (i, v * q)))
    }

    pub fn to_dense(&self, len: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); len];
        for (&i, c) in &self.coefficients {
            v[i] = c.clone();
        }
        v
    }

    /// Integer coefficients, `None` if any coefficient is fractional.
    pub fn to_int(&self) -> Option<IntChain> {
        self.coefficients
            .iter()
            .map(|(&i, v)| if v.is_integer() { v.to_integer().to_i64().map(|x| (i, x)) } else { None })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub source: usize,
    pub target: usize,
    /// generator index for Cayley edges
    pub generator: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub name: String,
    pub base: usize,
    /// relator index for Cayley cells
    pub relator: Option<usize>,
    pub boundary: IntChain,
}

/// A finite 2-complex with integer boundary maps: a truncated Cayley complex
/// (vertices labelled by canonical words) or an explicitly listed complex.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    /// canonical words; empty for explicitly listed complexes
    pub vertices: Vec<GroupWord>,
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    pub cells: Vec<Cell>,
    pub d1: SparseIntMatrix,
    pub d2: SparseIntMatrix,
    /// word-length radius; `None` for explicitly listed complexes
    pub radius: Option<usize>,
    edge_index: HashMap<String, usize>,
}

impl CayleyBall {
    fn assemble(
        vertices: Vec<GroupWord>,
        vertex_count: usize,
        edges: Vec<Edge>,
        cells: Vec<Cell>,
        radius: Option<usize>,
    ) -> Self {
        let d1 = SparseIntMatrix::from_columns(
            vertex_count,
            edges.iter().map(|e| vec![(e.target, 1), (e.source, -1)]).collect(),
        );
        let d2 = SparseIntMatrix::from_columns(edges.len(), cells.iter().map(|c| c.boundary.clone()).collect());
        let edge_index = edges.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect();
        CayleyBall { vertices, vertex_count, edges, cells, d1, d2, radius, edge_index }
    }

    pub fn edge_by_name(&self, name: &str) -> Option<usize> {
        self.edge_index.get(name).copied()
    }

    /// Word length of a vertex (0 for listed complexes).
    pub fn vertex_depth(&self, v: usize) -> usize {
        self.vertices.get(v).map_or(0, GroupWord::len)
    }

    /// `true` when some vertex of the cell lies within one step of the
    /// truncation sphere.
    pub fn cell_near_boundary(&self, cell: usize) -> bool {
        let Some(r) = self.radius else { return false };
        self.cells[cell].boundary.iter().any(|&(e, _)| {
            let edge = &self.edges[e];
            self.vertex_depth(edge.source) + 1 >= r || self.vertex_depth(edge.target) + 1 >= r
        })
    }

    /// Checks `d1·d2 = 0` exactly.
    pub fn boundary_check(&self) -> Result<(), ComplexError> {
        match self.d1.product_is_zero(&self.d2) {
            None => Ok(()),
            Some((vertex, cell)) => Err(ComplexError::Boundary { vertex, cell }),
        }
    }

    pub fn is_cycle(&self, chain: &[(usize, i64)]) -> bool {
        self.d1.mul_sparse(chain).is_empty()
    }

    /// Connected components of the 1-skeleton.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.vertex_count);
        for e in &self.edges {
            uf.union(e.source, e.target);
        }
        (0..self.vertex_count).filter(|&v| uf.find(v) == v).count()
    }

    /// `adj[v]` lists `(edge, other endpoint, direction)`; loops appear twice.
    fn adjacency(&self) -> Adjacency {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.source].push((i, e.target, 1));
            adj[e.target].push((i, e.source, -1));
        }
        adj
    }

    /// Index of a vertex word (vertices are sorted shortlex).
    pub fn vertex_of(&self, w: &GroupWord) -> Option<usize> {
        self.vertices.binary_search(w).ok()
    }

    /// Edge leaving `source` labelled by generator `g`.
    pub fn edge_from(&self, source: usize, g: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.source == source && e.generator == Some(g))
    }

    /// The 1-chain traced by reading `letters` from vertex `start`, or `None`
    /// if the path leaves the complex.
    pub fn path_chain(&self, start: usize, letters: &[Letter]) -> Option<(IntChain, usize)> {
        let by_source: HashMap<(usize, usize), usize> =
            self.edges.iter().enumerate().filter_map(|(i, e)| e.generator.map(|g| ((e.source, g), i))).collect();
        let by_target: HashMap<(usize, usize), usize> =
            self.edges.iter().enumerate().filter_map(|(i, e)| e.generator.map(|g| ((e.target, g), i))).collect();
        let mut cur = start;
        let mut chain = Vec::new();
        for &l in letters {
            let g = (l.unsigned_abs() - 1) as usize;
            if l > 0 {
                let e = *by_source.get(&(cur, g))?;
                chain.push((e, 1));
                cur = self.edges[e].target;
            } else {
                let e = *by_target.get(&(cur, g))?;
                chain.push((e, -1));
                cur = self.edges[e].source;
            }
        }
        Some((normalize_chain(chain), cur))
    }

    /// Vertices incident to a 1-chain, sorted.
    pub fn chain_vertices(&self, chain: &[(usize, i64)]) -> Vec<usize> {
        let mut vs: Vec<usize> =
            chain.iter().flat_map(|&(e, _)| [self.edges[e].source, self.edges[e].target]).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Vertices on the boundary of a cell.
    pub fn cell_vertices(&self, cell: usize) -> Vec<usize> {
        self.chain_vertices(&self.cells[cell].boundary)
    }

    /// Parses a cycle given as `edge:coeff,edge:coeff,...`.
    pub fn parse_cycle(&self, text: &str) -> Result<IntChain, ComplexError> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (e, c) = part.rsplit_once(':').ok_or_else(|| ComplexError::Syntax {
                line: 1,
                message: format!("expected edge:coeff, got `{part}`"),
            })?;
            let edge = self.edge_by_name(e.trim()).ok_or_else(|| ComplexError::UnknownEdge(e.to_string()))?;
            let coeff: i64 = c.trim().parse().map_err(|_| ComplexError::Syntax {
                line: 1,
                message: format!("coefficient `{c}` is not an integer"),
            })?;
            out.push((edge, coeff));
        }
        Ok(normalize_chain(out))
    }
}

/// Lazily explored Cayley graph: canonical words are interned on first use
/// and their neighbours cached.
pub struct CayleyGraph {
    wp: WordProblem,
    bound: usize,
    ids: HashMap<GroupWord, usize>,
    words: Vec<GroupWord>,
    /// `neighbors[v][slot]`, slot `2g` for `+g` and `2g+1` for `-g`
    neighbors: Vec<Vec<Option<Option<usize>>>>,
}

fn slot(l: Letter) -> usize {
    let g = (l.unsigned_abs() - 1) as usize;
    2 * g + usize::from(l < 0)
}

impl CayleyGraph {
    /// Vertices are canonical words of length at most `bound`.
    pub fn new(wp: WordProblem, bound: usize) -> Self {
        let mut g = CayleyGraph { wp, bound, ids: HashMap::new(), words: vec![], neighbors: vec![] };
        g.intern(GroupWord::identity());
        g
    }

    pub fn word_problem(&self) -> &WordProblem {
        &self.wp
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn word(&self, v: usize) -> &GroupWord {
        &self.words[v]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn intern(&mut self, w: GroupWord) -> usize {
        if let Some(&id) = self.ids.get(&w) {
            return id;
        }
        let id = self.words.len();
        self.ids.insert(w.clone(), id);
        self.words.push(w);
        let slots = 2 * self.wp.presentation().generator_count();
        self.neighbors.push(vec![None; slots]);
        id
    }

    /// Vertex reached from `v` along `letter`, or `None` when it leaves the ball.
    pub fn step(&mut self, v: usize, letter: Letter) -> Result<Option<usize>, WordError> {
        if let Some(cached) = self.neighbors[v][slot(letter)] {
            return Ok(cached);
        }
        let w = self.words[v].push(letter);
        let located = self.wp.locate(&w, self.bound)?;
        let target = located.map(|nf| self.intern(nf));
        self.neighbors[v][slot(letter)] = Some(target);
        if let Some(t) = target {
            self.neighbors[t][slot(-letter)] = Some(Some(v));
        }
        Ok(target)
    }

    /// Letters in the fixed order `+g₀, -g₀, +g₁, …`.
    pub fn letters(&self) -> Vec<Letter> {
        let n = self.wp.presentation().generator_count() as Letter;
        (1..=n).flat_map(|g| [g, -g]).collect()
    }

    /// Breadth-first search from `seeds` to graph distance `depth`.
    pub fn neighborhood(&mut self, seeds: &[usize], depth: usize) -> Result<Vec<usize>, WordError> {
        let letters = self.letters();
        let mut dist: HashMap<usize, usize> = seeds.iter().map(|&s| (s, 0)).collect();
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == depth {
                continue;
            }
            for &l in &letters {
                if let Some(t) = self.step(v, l)? {
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(t) {
                        e.insert(d + 1);
                        queue.push_back(t);
                    }
                }
            }
        }
        let mut out: Vec<usize> = dist.into_keys().collect();
        out.sort_by(|&a, &b| self.words[a].cmp(&self.words[b]));
        Ok(out)
    }

    /// Full subcomplex spanned by the given vertex set: every edge between
    /// them and every relator cell whose boundary loop stays inside.
    pub fn subcomplex(&mut self, vertex_ids: &[usize]) -> Result<CayleyBall, WordError> {
        let mut order = vertex_ids.to_vec();
        order.sort_by(|&a, &b| self.words[a].cmp(&self.words[b]));
        order.dedup();
        let local: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let gens = self.wp.presentation().generator_count();

        let mut edges = Vec::new();
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, &v) in order.iter().enumerate() {
            for g in 0..gens {
                if let Some(t) = self.step(v, g as Letter + 1)? {
                    if let Some(&j) = local.get(&t) {
                        edge_of.insert((i, g), edges.len());
                        edges.push(Edge { name: edges.len().to_string(), source: i, target: j, generator: Some(g) });
                    }
                }
            }
        }

        let relators: Vec<GroupWord> = self.wp.presentation().relators.clone();
        let mut cells = Vec::new();
        let mut seen: HashSet<IntChain> = HashSet::new();
        for (i, &v) in order.iter().enumerate() {
            'rel: for (k, r) in relators.iter().enumerate() {
                let mut cur = v;
                let mut boundary = Vec::with_capacity(r.len());
                for &l in r.letters() {
                    let Some(next) = self.step(cur, l)? else { continue 'rel };
                    let (Some(&a), Some(&b)) = (local.get(&cur), local.get(&next)) else { continue 'rel };
                    let g = (l.unsigned_abs() - 1) as usize;
                    if l > 0 {
                        boundary.push((edge_of[&(a, g)], 1));
                    } else {
                        boundary.push((edge_of[&(b, g)], -1));
                    }
                    cur = next;
                }
                debug_assert_eq!(cur, v, "relator loop must close");
                let boundary = normalize_chain(boundary);
                let key = sign_normalized(&boundary);
                if seen.insert(key) {
                    cells.push(Cell { name: cells.len().to_string(), base: i, relator: Some(k), boundary });
                }
            }
        }
        let words = order.iter().map(|&v| self.words[v].clone()).collect();
        Ok(CayleyBall::assemble(words, order.len(), edges, cells, Some(self.bound)))
    }
}

fn sign_normalized(c: &[(usize, i64)]) -> IntChain {
    match c.first() {
        Some(&(_, v)) if v < 0 => c.iter().map(|&(i, x)| (i, -x)).collect(),
        _ => c.to_vec(),
    }
}

/// Ball of the given word-length radius around the identity.
pub fn build_ball(wp: &WordProblem, radius: usize) -> Result<CayleyBall, WordError> {
    let mut g = CayleyGraph::new(wp.clone(), radius);
    let verts = g.neighborhood(&[g.identity()], radius)?;
    g.subcomplex(&verts)
}

/// Parses an explicitly listed 2-complex:
///
/// ```text
/// vertices: 1
/// edge e 0 0
/// cell f e:2
/// ```
pub fn load_complex(text: &str) -> Result<CayleyBall, ComplexError> {
    let mut vertex_count: Option<usize> = None;
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_ids: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<Cell> = Vec::new();
    let mut cell_names: HashSet<String> = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let syntax = |message: String| ComplexError::Syntax { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "vertices:" => {
                let n = toks
                    .get(1)
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| syntax("expected `vertices: <n>`".into()))?;
                if vertex_count.replace(n).is_some() {
                    return Err(syntax("duplicate vertices line".into()));
                }
            }
            "edge" => {
                let n = vertex_count.ok_or_else(|| syntax("`vertices:` must come first".into()))?;
                if toks.len() != 4 {
                    return Err(syntax("expected `edge <id> <src> <dst>`".into()));
                }
                let parse_v = |t: &str| -> Result<usize, ComplexError> {
                    t.parse::<usize>()
                        .ok()
                        .filter(|&v| v < n)
                        .ok_or_else(|| ComplexError::Syntax { line, message: format!("bad vertex `{t}`") })
                };
                let (source, target) = (parse_v(toks[2])?, parse_v(toks[3])?);
                if edge_ids.insert(toks[1].to_string(), edges.len()).is_some() {
                    return Err(syntax(format!("duplicate edge id `{}`", toks[1])));
                }
                edges.push(Edge { name: toks[1].to_string(), source, target, generator: None });
            }
            "cell" => {
                if toks.len() < 2 {
                    return Err(syntax("expected `cell <id> <edge>:<coeff> ...`".into()));
                }
                if !cell_names.insert(toks[1].to_string()) {
                    return Err(syntax(format!("duplicate cell id `{}`", toks[1])));
                }
                let mut boundary = Vec::new();
                for t in &toks[2..] {
                    let (e, c) = t.rsplit_once(':').ok_or_else(|| syntax(format!("expected edge:coeff, got `{t}`")))?;
                    let e = *edge_ids.get(e).ok_or_else(|| syntax(format!("unknown edge `{e}`")))?;
                    let c: i64 = c.parse().map_err(|_| syntax(format!("coefficient `{c}` is not an integer")))?;
                    boundary.push((e, c));
                }
                let base = boundary.first().map_or(0, |&(e, _)| edges[e].source);
                cells.push(Cell {
                    name: toks[1].to_string(),
                    base,
                    relator: None,
                    boundary: normalize_chain(boundary),
                });
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    let n = vertex_count.ok_or(ComplexError::Syntax { line: 1, message: "missing `vertices:` line".into() })?;
    let complex = CayleyBall::assemble(vec![], n, edges, cells, None);
    complex.boundary_check()?;
    Ok(complex)
}

/// A ℤ-basis of the integral 1-cycles of a complex, scaled by `scale`
/// (scale 1 is the full integer cycle lattice; scale m its m-multiple).
#[derive(Clone, Debug)]
pub struct IntegralCycleLattice {
    pub basis: Vec<IntChain>,
    pub scale: i64,
    endpoints: Vec<(usize, usize)>,
    vertex_count: usize,
}

impl IntegralCycleLattice {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// The same lattice multiplied by `m`.
    pub fn scaled(&self, m: i64) -> Self {
        assert!(m > 0, "lattice scale must be positive");
        IntegralCycleLattice {
            basis: self.basis.iter().map(|b| b.iter().map(|&(i, v)| (i, v * m)).collect()).collect(),
            scale: self.scale * m,
            endpoints: self.endpoints.clone(),
            vertex_count: self.vertex_count,
        }
    }
}

/// Integer kernel of `d1` by column Hermite reduction.
pub fn cycle_lattice_basis(b: &CayleyBall) -> IntegralCycleLattice {
    let kernel = integer_kernel(&b.d1.to_dense_int());
    let basis = kernel
        .into_iter()
        .map(|v| {
            normalize_chain(
                v.iter().enumerate().map(|(i, x)| (i, x.to_i64().expect("cycle coefficients fit in i64"))).collect(),
            )
        })
        .collect();
    IntegralCycleLattice {
        basis,
        scale: 1,
        endpoints: b.edges.iter().map(|e| (e.source, e.target)).collect(),
        vertex_count: b.vertex_count,
    }
}

/// Default cap on the number of cycles [`enumerate_integral_cycles`] returns.
pub const DEFAULT_CYCLE_LIMIT: usize = 5_000_000;

/// Every lattice element of ℓ1 norm at most `k`, including zero, in a
/// deterministic order.
pub fn enumerate_integral_cycles(
    lattice: &IntegralCycleLattice,
    k: usize,
    limit: usize,
) -> Result<Vec<IntChain>, ComplexError> {
    let mut out = Vec::new();
    for_each_integral_cycle(lattice, k, |c| {
        if out.len() >= limit {
            return false;
        }
        out.push(c.to_vec());
        true
    });
    if out.len() >= limit && limit > 0 {
        // one more would have been produced if the visitor had continued
        let mut count = 0usize;
        for_each_integral_cycle(lattice, k, |_| {
            count += 1;
            count <= limit
        });
        if count > limit {
            return Err(ComplexError::Overflow(limit));
        }
    }
    Ok(out)
}

/// Streams the lattice elements of norm `<= k` to `visit`; stops early when
/// `visit` returns `false`.
///
/// Walks edges in index order assigning integer coefficients, pruning on the
/// remaining ℓ1 budget, on vertices whose incident edges are all assigned
/// but which are still unbalanced, and on total imbalance exceeding twice the
/// remaining budget. Elements of an m-scaled lattice are m times cycles of
/// norm `<= k/m`.
pub fn for_each_integral_cycle(
    lattice: &IntegralCycleLattice,
    k: usize,
    mut visit: impl FnMut(&[(usize, i64)]) -> bool,
) {
    let scale = lattice.scale;
    let budget = (k as i64) / scale;
    let n_edges = lattice.endpoints.len();
    let mut closing: Vec<Vec<usize>> = vec![vec![]; n_edges + 1];
    let mut last_edge = vec![None; lattice.vertex_count];
    for (e, &(s, t)) in lattice.endpoints.iter().enumerate() {
        last_edge[s] = Some(e);
        last_edge[t] = Some(e);
    }
    for (v, le) in last_edge.iter().enumerate() {
        closing[le.map_or(0, |e| e + 1)].push(v);
    }
    let mut state = EnumState {
        endpoints: &lattice.endpoints,
        closing: &closing,
        imbalance: vec![0; lattice.vertex_count],
        total_imbalance: 0,
        chain: Vec::new(),
        scale,
        stopped: false,
    };
    state.dfs(0, budget, &mut visit);
}

struct EnumState<'a> {
    endpoints: &'a [(usize, usize)],
    closing: &'a [Vec<usize>],
    imbalance: Vec<i64>,
    total_imbalance: i64,
    chain: Vec<(usize, i64)>,
    scale: i64,
    stopped: bool,
}

impl EnumState<'_> {
    fn apply(&mut self, e: usize, c: i64) {
        let (s, t) = self.endpoints[e];
        if s == t {
            return;
        }
        for (v, d) in [(s, -c), (t, c)] {
            self.total_imbalance -= self.imbalance[v].abs();
            self.imbalance[v] += d;
            self.total_imbalance += self.imbalance[v].abs();
        }
    }

    fn dfs(&mut self, e: usize, budget: i64, visit: &mut impl FnMut(&[(usize, i64)]) -> bool) {
        if self.stopped {
            return;
        }
        if self.closing[e].iter().any(|&v| self.imbalance[v] != 0) {
            return;
        }
        if self.total_imbalance > 2 * budget {
            return;
        }
        if e == self.endpoints.len() {
            debug_assert_eq!(self.total_imbalance, 0);
            let scaled: Vec<(usize, i64)> = self.chain.iter().map(|&(i, v)| (i, v * self.scale)).collect();
            if !visit(&scaled) {
                self.stopped = true;
            }
            return;
        }
        // coefficient order 0, 1, -1, 2, -2, ... keeps the output deterministic
        self.dfs(e + 1, budget, visit);
        for mag in 1..=budget {
            for c in [mag, -mag] {
                self.apply(e, c);
                self.chain.push((e, c));
                self.dfs(e + 1, budget - mag, visit);
                self.chain.pop();
                self.apply(e, -c);
                if self.stopped {
                    return;
                }
            }
        }
    }
}

/// Every connected integral cycle of norm at most `k`, sorted by
/// `(norm, chain)`.
///
/// A connected cycle is the chain of an Euler circuit, so these are found
/// as closed walks that never use an edge in both directions, started at the
/// smallest vertex of their support and pruned by graph distance back to it.
pub fn connected_cycles(b: &CayleyBall, k: usize, limit: usize) -> Result<Vec<IntChain>, ComplexError> {
    use rayon::prelude::*;
    use std::sync::atomic::AtomicUsize;

    let adj = b.adjacency();
    let count = AtomicUsize::new(0);
    let per_start: Vec<Option<Vec<IntChain>>> = (0..b.vertex_count)
        .into_par_iter()
        .map(|s| {
            let dist = bfs_from(&adj, s, |v| v >= s);
            let mut w = Walker {
                adj: &adj,
                start: s,
                dist: &dist,
                usage: HashMap::new(),
                path: Vec::new(),
                found: HashSet::new(),
                count: &count,
                limit,
                overflow: false,
            };
            w.walk(s, k);
            (!w.overflow).then(|| w.found.into_iter().collect())
        })
        .collect();
    let mut all = Vec::new();
    for found in per_start {
        all.extend(found.ok_or(ComplexError::Overflow(limit))?);
    }
    all.sort_by(|a, c| (int_chain_l1(a), a).cmp(&(int_chain_l1(c), c)));
    Ok(all)
}

type Adjacency = Vec<Vec<(usize, usize, i64)>>;

fn bfs_from(adj: &Adjacency, s: usize, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &(_, u, _) in &adj[v] {
            if allowed(u) && dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

struct Walker<'a> {
    adj: &'a Adjacency,
    start: usize,
    dist: &'a [usize],
    usage: HashMap<usize, i64>,
    path: Vec<(usize, i64)>,
    found: HashSet<IntChain>,
    count: &'a std::sync::atomic::AtomicUsize,
    limit: usize,
    overflow: bool,
}

impl Walker<'_> {
    fn walk(&mut self, v: usize, remaining: usize) {
        if remaining == 0 || self.overflow {
            return;
        }
        for &(e, u, sign) in &self.adj[v] {
            if u < self.start || self.dist[u] > remaining - 1 {
                continue;
            }
            let used = self.usage.get(&e).copied().unwrap_or(0);
            if used * sign < 0 {
                continue;
            }
            self.usage.insert(e, used + sign);
            self.path.push((e, sign));
            if u == self.start {
                let chain = normalize_chain(self.path.clone());
                if self.found.insert(chain) {
                    let total = self.count.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    if total > self.limit {
                        self.overflow = true;
                    }
                }
            }
            self.walk(u, remaining - 1);
            self.path.pop();
            self.usage.insert(e, used);
            if self.overflow {
                return;
            }
        }
    }
}

/// Edge of a lazily explored Cayley graph: `(source vertex, generator)`.
pub type LazyEdge = (usize, usize);

/// Integral 1-chain on a lazily explored Cayley graph.
pub type LazyChain = Vec<(LazyEdge, i64)>;

/// Every connected integral cycle of norm at most `k` whose support
/// contains the identity, sorted by `(norm, chain)`.
pub fn anchored_cycles(g: &mut CayleyGraph, k: usize, limit: usize) -> Result<Vec<LazyChain>, ComplexError> {
    let depth = k / 2;
    let letters = g.letters();
    let id = g.identity();
    // breadth-first layers; vertices on the last layer only need their
    // downward neighbours unless the walk length is odd
    let mut dist: HashMap<usize, usize> = HashMap::from([(id, 0)]);
    let mut down: HashMap<usize, Vec<(Letter, usize)>> = HashMap::new();
    let mut layer = vec![id];
    for d in 0..depth {
        let mut next = Vec::new();
        for &v in &layer {
            for &l in &letters {
                let Some(t) = g.step(v, l)? else { continue };
                match dist.get(&t) {
                    None => {
                        dist.insert(t, d + 1);
                        next.push(t);
                        down.entry(t).or_default().push((-l, v));
                    }
                    Some(&dt) if dt == d + 1 => down.entry(t).or_default().push((-l, v)),
                    _ => {}
                }
            }
        }
        layer = next;
    }
    let mut w = LazyWalker {
        g,
        letters,
        depth,
        dist: &dist,
        down: &down,
        usage: HashMap::new(),
        path: Vec::new(),
        found: HashSet::new(),
        limit,
    };
    w.walk(id, k)?;
    let mut all: Vec<LazyChain> = w.found.into_iter().collect();
    all.sort_by(|a, c| (lazy_l1(a), a).cmp(&(lazy_l1(c), c)));
    Ok(all)
}

pub fn lazy_l1(c: &[(LazyEdge, i64)]) -> i64 {
    c.iter().map(|&(_, v)| v.abs()).sum()
}

struct LazyWalker<'a> {
    g: &'a mut CayleyGraph,
    letters: Vec<Letter>,
    depth: usize,
    dist: &'a HashMap<usize, usize>,
    down: &'a HashMap<usize, Vec<(Letter, usize)>>,
    usage: HashMap<LazyEdge, i64>,
    path: Vec<(LazyEdge, i64)>,
    found: HashSet<LazyChain>,
    limit: usize,
}

impl LazyWalker<'_> {
    fn moves(&mut self, v: usize, remaining: usize) -> Result<Vec<(Letter, usize)>, ComplexError> {
        let dv = self.dist[&v];
        if dv == self.depth && remaining <= dv {
            return Ok(self.down.get(&v).cloned().unwrap_or_default());
        }
        let mut out = Vec::new();
        for &l in &self.letters {
            if let Some(u) = self.g.step(v, l)? {
                out.push((l, u));
            }
        }
        Ok(out)
    }

    fn walk(&mut self, v: usize, remaining: usize) -> Result<(), ComplexError> {
        if remaining == 0 {
            return Ok(());
        }
        for (l, u) in self.moves(v, remaining)? {
            let Some(&du) = self.dist.get(&u) else { continue };
            if du > remaining - 1 {
                continue;
            }
            let g = (l.unsigned_abs() - 1) as usize;
            let (edge, sign) = if l > 0 { ((v, g), 1) } else { ((u, g), -1) };
            let used = self.usage.get(&edge).copied().unwrap_or(0);
            if used * sign < 0 {
                continue;
            }
            self.usage.insert(edge, used + sign);
            self.path.push((edge, sign));
            if du == 0 {
                let mut acc: BTreeMap<LazyEdge, i64> = BTreeMap::new();
                for &(e, s) in &self.path {
                    *acc.entry(e).or_default() += s;
                }
                let chain: LazyChain = acc.into_iter().filter(|&(_, c)| c != 0).collect();
                self.found.insert(chain);
                if self.found.len() > self.limit {
                    return Err(ComplexError::Overflow(self.limit));
                }
            }
            self.walk(u, remaining - 1)?;
            self.path.pop();
            self.usage.insert(edge, used);
        }
        Ok(())
    }
}

/// Connected pieces of an integral chain's support (edges sharing a vertex).
pub fn chain_components(b: &CayleyBall, chain: &[(usize, i64)]) -> Vec<IntChain> {
    if chain.len() <= 1 {
        return vec![chain.to_vec()];
    }
    let mut uf = UnionFind::new(b.vertex_count);
    for &(e, _) in chain {
        uf.union(b.edges[e].source, b.edges[e].target);
    }
    let mut groups: BTreeMap<usize, IntChain> = BTreeMap::new();
    for &(e, c) in chain {
        groups.entry(uf.find(b.edges[e].source)).or_default().push((e, c));
    }
    groups.into_values().collect()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
