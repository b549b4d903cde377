//! Exact linear programming: a dense two-phase primal simplex with Bland's
//! rule, ℓ1 minimisation over affine solution sets, and best-bound
//! branch-and-bound for the integral version.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_rational::Ratio;

use crate::matrix::DenseMatrix;
use crate::scalar::{int_to_ratio, Field, IntLike};
use crate::smith::integer_solution;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptError {
    #[error("Overflow: branch-and-bound exceeded {0}")]
    Overflow(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
}

/// `minimize c·x  subject to  A·x = b, x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: DenseMatrix<T>,
    pub rhs: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveResult<T> {
    Optimal { value: T, witness: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T> SolveResult<T> {
    pub fn status(&self) -> SolveStatus {
        match self {
            SolveResult::Optimal { .. } => SolveStatus::Optimal,
            SolveResult::Infeasible => SolveStatus::Infeasible,
            SolveResult::Unbounded => SolveStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            SolveResult::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&[T]> {
        match self {
            SolveResult::Optimal { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

impl<T: Field> LinearProgram<T> {
    pub fn new(objective: Vec<T>, constraints: DenseMatrix<T>, rhs: Vec<T>) -> Result<Self, OptError> {
        if objective.len() != constraints.cols() || rhs.len() != constraints.rows() {
            return Err(OptError::DimensionMismatch(format!(
                "objective {} / matrix {}x{} / rhs {}",
                objective.len(),
                constraints.rows(),
                constraints.cols(),
                rhs.len()
            )));
        }
        Ok(LinearProgram { objective, constraints, rhs })
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    /// `A·x = b`, `x ≥ 0`, exactly.
    pub fn is_feasible_point(&self, x: &[T]) -> bool {
        x.len() == self.variables() && x.iter().all(|v| !v.is_negative()) && self.constraints.mul_vec(x) == self.rhs
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Dense simplex tableau; row `i` expresses basic variable `basis[i]`.
struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// reduced costs for every column
    cost: Vec<T>,
    /// negated objective value at the current basis
    neg_value: T,
    /// columns allowed to enter the basis
    enterable: Vec<bool>,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = T::one() / self.rows[row][col].clone();
        let nz: Vec<usize> = (0..self.rows[row].len()).filter(|&j| !self.rows[row][j].is_zero()).collect();
        for &j in &nz {
            self.rows[row][j] = self.rows[row][j].clone() * inv.clone();
        }
        self.rhs[row] = self.rhs[row].clone() * inv;
        let prow = self.rows[row].clone();
        let prhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for &j in &nz {
                let d = f.clone() * prow[j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - d;
            }
            self.rhs[i] = self.rhs[i].clone() - f * prhs.clone();
        }
        if !self.cost[col].is_zero() {
            let f = self.cost[col].clone();
            for &j in &nz {
                let d = f.clone() * prow[j].clone();
                self.cost[j] = self.cost[j].clone() - d;
            }
            self.neg_value = self.neg_value.clone() - f * prhs;
        }
        self.basis[row] = col;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving variable on ties.
    fn run(&mut self) -> PivotOutcome {
        loop {
            let entering = (0..self.cost.len()).find(|&j| self.enterable[j] && self.cost[j].is_negative());
            let Some(col) = entering else {
                return PivotOutcome::Optimal;
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return PivotOutcome::Unbounded,
                Some((row, _)) => self.pivot(row, col),
            }
        }
    }
}

/// Two-phase primal simplex. The returned witness is re-checked by substitution.
pub fn simplex_solve<T: Field>(lp: &LinearProgram<T>) -> SolveResult<T> {
    let m = lp.constraints.rows();
    let n = lp.variables();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let flip = lp.rhs[i].is_negative();
        let mut r: Vec<T> = lp.constraints.row(i).iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        r.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        rows.push(r);
        rhs.push(if flip { -lp.rhs[i].clone() } else { lp.rhs[i].clone() });
    }
    // phase one: minimise the sum of artificials
    let mut cost = vec![T::zero(); n + m];
    for j in 0..n {
        cost[j] = rows.iter().fold(T::zero(), |acc, r| acc - r[j].clone());
    }
    let neg_value = rhs.iter().fold(T::zero(), |acc, b| acc - b.clone());
    let mut tab = Tableau { rows, rhs, basis: (n..n + m).collect(), cost, neg_value, enterable: vec![true; n + m] };
    if let PivotOutcome::Unbounded = tab.run() {
        unreachable!("phase one objective is bounded below by zero");
    }
    if !tab.neg_value.is_zero() {
        return SolveResult::Infeasible;
    }
    // drive zero-valued artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.rhs.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    // phase two
    let mut cost: Vec<T> = lp.objective.clone();
    cost.extend((0..m).map(|_| T::zero()));
    let mut neg_value = T::zero();
    for (i, &bv) in tab.basis.iter().enumerate() {
        let cb = cost[bv].clone();
        if cb.is_zero() {
            continue;
        }
        for (c, a) in cost.iter_mut().zip(&tab.rows[i]) {
            if !a.is_zero() {
                *c = c.clone() - cb.clone() * a.clone();
            }
        }
        neg_value = neg_value - cb * tab.rhs[i].clone();
    }
    tab.cost = cost;
    tab.neg_value = neg_value;
    tab.enterable = (0..n + m).map(|j| j < n).collect();
    if let PivotOutcome::Unbounded = tab.run() {
        return SolveResult::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs[i].clone();
        }
    }
    let value = -tab.neg_value;
    assert!(lp.is_feasible_point(&x), "simplex produced an infeasible witness");
    assert!(lp.objective_at(&x) == value, "simplex witness does not attain its value");
    SolveResult::Optimal { value, witness: x }
}

/// `min ‖x‖₁  subject to  A·x = b` over free-signed rational `x`.
pub fn l1_min_rational<T: Field>(a: &DenseMatrix<T>, b: &[T]) -> SolveResult<T> {
    l1_min_with_bounds(a, b, &[])
}

/// Bound on a single coordinate of the original (free) variable vector.
#[derive(Clone, Debug)]
enum Bound<T> {
    Upper(usize, T),
    Lower(usize, T),
}

fn l1_min_with_bounds<T: Field>(a: &DenseMatrix<T>, b: &[T], bounds: &[Bound<T>]) -> SolveResult<T> {
    let (m, n) = a.shape();
    let k = bounds.len();
    let vars = 2 * n + k;
    let mut mat = DenseMatrix::<T>::zeros(m + k, vars);
    let mut rhs = b.to_vec();
    for i in 0..m {
        for j in 0..n {
            let v = a[(i, j)].clone();
            if !v.is_zero() {
                mat[(i, j)] = v.clone();
                mat[(i, n + j)] = -v;
            }
        }
    }
    for (t, bound) in bounds.iter().enumerate() {
        let (j, val, slack) = match bound {
            Bound::Upper(j, u) => (*j, u.clone(), T::one()),
            Bound::Lower(j, l) => (*j, l.clone(), -T::one()),
        };
        mat[(m + t, j)] = T::one();
        mat[(m + t, n + j)] = -T::one();
        mat[(m + t, 2 * n + t)] = slack;
        rhs.push(val);
    }
    let mut objective = vec![T::one(); 2 * n];
    objective.extend((0..k).map(|_| T::zero()));
    let lp = LinearProgram { objective, constraints: mat, rhs };
    match simplex_solve(&lp) {
        SolveResult::Optimal { value, witness } => {
            let x: Vec<T> = (0..n).map(|j| witness[j].clone() - witness[n + j].clone()).collect();
            SolveResult::Optimal { value, witness: x }
        }
        SolveResult::Infeasible => SolveResult::Infeasible,
        SolveResult::Unbounded => unreachable!("an l1 objective is bounded below"),
    }
}

/// Budget limits for [`l1_min_integral`].
#[derive(Clone, Copy, Debug)]
pub struct BranchLimits {
    /// maximum depth, as a multiple of the variable count
    pub depth_factor: usize,
    pub max_nodes: usize,
}

impl Default for BranchLimits {
    fn default() -> Self {
        BranchLimits { depth_factor: 10, max_nodes: 100_000 }
    }
}

struct Node<T> {
    bound: T,
    seq: usize,
    depth: usize,
    bounds: Vec<Bound<T>>,
    witness: Vec<T>,
}

impl<T: Field> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl<T: Field> Eq for Node<T> {}
impl<T: Field> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Field> Ord for Node<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.bound, self.seq).cmp(&(&other.bound, other.seq))
    }
}

/// `min ‖x‖₁  subject to  A·x = b`, `x ∈ ℤⁿ`.
pub fn l1_min_integral<I>(a: &DenseMatrix<I>, b: &[I]) -> Result<SolveResult<Ratio<I>>, OptError>
where
    I: IntLike,
    Ratio<I>: Field,
{
    l1_min_integral_with(a, b, BranchLimits::default())
}

pub fn l1_min_integral_with<I>(
    a: &DenseMatrix<I>,
    b: &[I],
    limits: BranchLimits,
) -> Result<SolveResult<Ratio<I>>, OptError>
where
    I: IntLike,
    Ratio<I>: Field,
{
    if a.rows() != b.len() {
        return Err(OptError::DimensionMismatch(format!("{} rows vs rhs {}", a.rows(), b.len())));
    }
    // parity-type obstructions are decided before any LP is solved
    if integer_solution(a, b).is_none() {
        return Ok(SolveResult::Infeasible);
    }
    let aq = a.map(int_to_ratio);
    let bq: Vec<Ratio<I>> = b.iter().map(int_to_ratio).collect();
    let n = a.cols();
    let max_depth = limits.depth_factor * n.max(1);

    let root = match l1_min_with_bounds(&aq, &bq, &[]) {
        SolveResult::Optimal { value, witness } => Node { bound: value, seq: 0, depth: 0, bounds: vec![], witness },
        _ => return Ok(SolveResult::Infeasible),
    };
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(root));
    let mut seq = 1;
    while let Some(Reverse(node)) = heap.pop() {
        let fractional = node.witness.iter().position(|v| !v.is_integral());
        let Some(j) = fractional else {
            // best-bound order: the first integral relaxation popped is optimal
            return Ok(SolveResult::Optimal { value: node.bound, witness: node.witness });
        };
        if node.depth >= max_depth {
            return Err(OptError::Overflow(format!("depth cap {max_depth}")));
        }
        if seq > limits.max_nodes {
            return Err(OptError::Overflow(format!("node budget {}", limits.max_nodes)));
        }
        let v = &node.witness[j];
        let children = [
            Bound::Upper(j, Ratio::from_integer(v.floor().to_integer())),
            Bound::Lower(j, Ratio::from_integer(v.ceil().to_integer())),
        ];
        for child in children {
            let mut bounds = node.bounds.clone();
            bounds.push(child);
            if let SolveResult::Optimal { value, witness } = l1_min_with_bounds(&aq, &bq, &bounds) {
                heap.push(Reverse(Node { bound: value, seq, depth: node.depth + 1, bounds, witness }));
                seq += 1;
            }
        }
    }
    Ok(SolveResult::Infeasible)
}
