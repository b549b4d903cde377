//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use common::{q, random_chain_map, small_int, small_rational, M};
use fillvol::cayley::{build_ball, load_complex};
use fillvol::cylinder::{check_chain_map, mapping_cylinder, quotient_split_check, trimmed_homology_ranks, ChainMap};
use fillvol::exactopt::{l1_min_integral, simplex_solve, LinearProgram, SolveResult};
use fillvol::filling::{
    fill_over, fv2_anchored, fv2_estimate_with, linearity_probe, preceq_witness, rational_cycle_demo, AnchoredOptions,
    FVTable, FillValue, FvOptions, LinearityVerdict, DEFAULT_PAD,
};
use fillvol::matrix::{rank, solve, DenseMatrix};
use fillvol::normedmod::{bounded_constant, norm_equivalence_constants, ModuleMap, PresentedModule};
use fillvol::words::{check_c16, NormalFormStrategy, Presentation, WordProblem};
use fillvol::{CoefficientRing, Rational};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn z2_ball_table(radius: usize, ring: CoefficientRing, scale: i64) -> FVTable {
    let wp = WordProblem::new(&Presentation::z2(), NormalFormStrategy::Abelian).unwrap();
    let ball = build_ball(&wp, radius).unwrap();
    fv2_estimate_with(&ball, &FvOptions::new(12, ring).lattice_scale(scale)).unwrap()
}

fn genus2_table(ring: CoefficientRing) -> FVTable {
    let wp = WordProblem::new(&Presentation::surface(2), NormalFormStrategy::Dehn).unwrap();
    let opts = AnchoredOptions { fv: FvOptions::new(12, ring), radius: 8, pad: DEFAULT_PAD };
    fv2_anchored(&wp, &opts).unwrap()
}

fn fmt_values(t: &FVTable) -> String {
    t.entries.iter().map(|e| e.value.to_string()).collect::<Vec<_>>().join(",")
}

fn criterion_1() -> Outcome {
    let mut times = Vec::new();
    for n in 1..=4usize {
        let start = Instant::now();
        let row = rational_cycle_demo(n).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure(row.l1 == Rational::one(), || format!("n={n}: l1 = {}", row.l1))?;
        ensure(row.fill_q == q(n as i64, 4), || format!("n={n}: fill_q = {}", row.fill_q))?;
        ensure(took < Duration::from_secs(120), || format!("n={n} took {took:?}"))?;
        times.push(format!("{}ms", took.as_millis()));
    }
    Ok(format!("fill_q = n/4, l1 = 1 for n = 1..4 ({})", times.join(", ")))
}

/// Unit-square edges of the plane: `(x, y, 0)` runs to `(x+1, y)`,
/// `(x, y, 1)` to `(x, y+1)`.
type PlaneEdge = (i32, i32, u8);

/// Every connected integral cycle of ℓ1 ≤ `k_max` in the plane, up to
/// translation, from closed walks that start at their lexicographically
/// least vertex.
fn plane_cycles(k_max: usize) -> HashSet<Vec<(PlaneEdge, i64)>> {
    fn walk(
        pos: (i32, i32),
        len: usize,
        k_max: usize,
        last: Option<usize>,
        chain: &mut BTreeMap<PlaneEdge, i64>,
        out: &mut HashSet<Vec<(PlaneEdge, i64)>>,
    ) {
        const STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        if pos == (0, 0) && len > 0 {
            let c: Vec<(PlaneEdge, i64)> = chain.iter().filter(|(_, &v)| v != 0).map(|(&e, &v)| (e, v)).collect();
            if !c.is_empty() {
                out.insert(normalize(c));
            }
        }
        let remaining = k_max - len;
        if remaining == 0 {
            return;
        }
        for (d, &(dx, dy)) in STEPS.iter().enumerate() {
            if last == Some((d + 2) % 4) {
                continue;
            }
            let next = (pos.0 + dx, pos.1 + dy);
            if next < (0, 0) || (next.0.unsigned_abs() + next.1.unsigned_abs()) as usize > remaining - 1 {
                continue;
            }
            let (edge, sign) = match d {
                0 => ((pos.0, pos.1, 0), 1),
                1 => ((pos.0, pos.1, 1), 1),
                2 => ((next.0, next.1, 0), -1),
                _ => ((next.0, next.1, 1), -1),
            };
            *chain.entry(edge).or_insert(0) += sign;
            walk(next, len + 1, k_max, Some(d), chain, out);
            *chain.get_mut(&edge).unwrap() -= sign;
        }
    }
    fn normalize(c: Vec<(PlaneEdge, i64)>) -> Vec<(PlaneEdge, i64)> {
        let min = c.iter().map(|((x, y, _), _)| (*x, *y)).min().unwrap();
        let mut v: Vec<_> = c.into_iter().map(|((x, y, d), s)| ((x - min.0, y - min.1, d), s)).collect();
        v.sort();
        v
    }
    let mut out = HashSet::new();
    walk((0, 0), 0, k_max, None, &mut BTreeMap::new(), &mut out);
    out
}

/// Minimal integral filling over the unit squares of the cycle's bounding
/// box, by branch and bound on the box's boundary matrix.
fn plane_fill(c: &[(PlaneEdge, i64)]) -> Rational {
    let xs = c.iter().map(|((x, _, _), _)| *x);
    let ys = c.iter().map(|((_, y, _), _)| *y);
    let (x0, x1) = (xs.clone().min().unwrap(), xs.max().unwrap() + 1);
    let (y0, y1) = (ys.clone().min().unwrap(), ys.max().unwrap() + 1);
    let mut edges: BTreeMap<PlaneEdge, usize> = BTreeMap::new();
    for x in x0..=x1 {
        for y in y0..=y1 {
            for d in 0..2u8 {
                let n = edges.len();
                edges.insert((x, y, d), n);
            }
        }
    }
    let mut cols = Vec::new();
    for x in x0..x1 {
        for y in y0..y1 {
            let mut col = vec![0i64; edges.len()];
            col[edges[&(x, y, 0)]] += 1;
            col[edges[&(x + 1, y, 1)]] += 1;
            col[edges[&(x, y + 1, 0)]] -= 1;
            col[edges[&(x, y, 1)]] -= 1;
            cols.push(col);
        }
    }
    let a = DenseMatrix::from_columns(&cols, edges.len());
    let mut b = vec![0i64; edges.len()];
    for (e, v) in c {
        b[edges[e]] = *v;
    }
    match l1_min_integral(&a, &b).unwrap() {
        SolveResult::Optimal { value, .. } => q(*value.numer(), *value.denom()),
        other => panic!("plane cycle not fillable: {other:?}"),
    }
}

fn criterion_2() -> Outcome {
    let table = z2_ball_table(6, CoefficientRing::Integers, 1);
    for (k, v) in [(4, 1), (8, 4), (12, 9)] {
        ensure(table.value_at(k) == Some(&q(v, 1)), || format!("FV({k}) = {:?}", table.value_at(k)))?;
    }
    // oracle: connected maxima, then the superadditive upper bound
    let cycles = plane_cycles(12);
    let mut conn = vec![Rational::zero(); 13];
    for c in &cycles {
        let norm: i64 = c.iter().map(|(_, v)| v.abs()).sum();
        let f = plane_fill(c);
        for slot in conn.iter_mut().skip(norm as usize) {
            if f > *slot {
                *slot = f.clone();
            }
        }
    }
    let mut upper = conn.clone();
    for k in 0..=12 {
        for j in 1..k {
            let s = &upper[j] + &upper[k - j];
            if s > upper[k] {
                upper[k] = s;
            }
        }
    }
    for k in 0..=12 {
        ensure(conn[k] == upper[k], || format!("oracle bounds differ at k={k}: {} vs {}", conn[k], upper[k]))?;
        ensure(table.value_at(k) == Some(&conn[k]), || {
            format!("k={k}: table {:?}, oracle {}", table.value_at(k), conn[k])
        })?;
    }
    let probe = linearity_probe(&table);
    ensure(probe.verdict == LinearityVerdict::Superlinear, || format!("verdict {}", probe.verdict))?;
    Ok(format!(
        "FV = [{}], oracle agrees on {} plane cycles, verdict {}",
        fmt_values(&table),
        cycles.len(),
        probe.verdict
    ))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    for (name, zt, qt) in [
        ("Z^2", z2_ball_table(6, CoefficientRing::Integers, 1), z2_ball_table(6, CoefficientRing::Rationals, 1)),
        ("genus 2", genus2_table(CoefficientRing::Integers), genus2_table(CoefficientRing::Rationals)),
    ] {
        for k in 0..=12 {
            let (vz, vq) = (zt.value_at(k).unwrap(), qt.value_at(k).unwrap());
            ensure(vq <= vz, || format!("{name} k={k}: FV_Q = {vq} > FV_Z = {vz}"))?;
        }
        lines.push(format!("{name} Q [{}] <= Z [{}]", fmt_values(&qt), fmt_values(&zt)));
    }
    Ok(lines.join("; "))
}

fn criterion_4() -> Outcome {
    let p = Presentation::surface(2);
    let c16 = check_c16(&p);
    ensure(c16.satisfied && c16.max_piece == 1 && c16.min_relator == 8, || format!("{c16:?}"))?;
    let table = genus2_table(CoefficientRing::Rationals);
    let probe = linearity_probe(&table);
    ensure(probe.verdict == LinearityVerdict::ConsistentWithLinear, || format!("verdict {}", probe.verdict))?;
    ensure(probe.slope_bound <= q(2, 1), || format!("slope bound {}", probe.slope_bound))?;
    Ok(format!(
        "C'(1/6) with max piece 1; anchored radius 8 FV_Q = [{}], {} with slope bound {}",
        fmt_values(&table),
        probe.verdict,
        probe.slope_bound
    ))
}

fn criterion_5() -> Outcome {
    let c = load_complex("vertices: 1\nedge e 0 0\ncell f e:2\n").map_err(|e| e.to_string())?;
    let gamma = [(0usize, 1i64)];
    let fill = |ring: &str, bound: u64| fill_over(&c, &gamma, &ring.parse().unwrap(), bound).unwrap();
    let z = fill("z", 64);
    ensure(z.value == FillValue::Unfillable, || format!("Z: {}", z.value))?;
    let rq = fill("q", 64);
    ensure(rq.value == FillValue::Finite(q(1, 2)), || format!("Q: {}", rq.value))?;
    let z2 = fill("zs:2", 64);
    ensure(z2.value == FillValue::Finite(q(1, 2)) && z2.exact && z2.multiplier == Some(2), || {
        format!("Z_(2): {z2:?}")
    })?;
    let z3 = fill("zs:3", 81);
    ensure(z3.value == FillValue::Unfillable && z3.exact, || format!("Z_(3): {z3:?}"))?;
    Ok("Z: Unfillable, Q: 1/2, Z_{2}: 1/2 exact at m=2, Z_{3}: Unfillable (certified)".into())
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let start = Instant::now();
    for t in 0..200 {
        let f = random_chain_map(&mut rng, 4, 4);
        ensure(check_chain_map(&f).unwrap(), || format!("case {t}: generator produced a non-chain map"))?;
        let cyl = mapping_cylinder(&f).map_err(|e| format!("case {t}: {e}"))?;
        ensure(cyl.m.is_complex(), || format!("case {t}: d''d'' != 0"))?;
        let id = ChainMap::identity(f.target());
        ensure(cyl.incl_c.then(&cyl.kappa).unwrap().same_components(&id), || format!("case {t}: kappa incl_C"))?;
        ensure(cyl.incl_b.then(&cyl.kappa).unwrap().same_components(&f), || format!("case {t}: kappa incl_B"))?;
        ensure(trimmed_homology_ranks(&cyl.m) == trimmed_homology_ranks(f.target()), || format!("case {t}: homology"))?;
        let split = quotient_split_check(&cyl.m, &cyl.incl_b).map_err(|e| format!("case {t}: {e}"))?;
        ensure(split.splits, || format!("case {t}: quotient does not split"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("200 random chain maps, zero failures ({}ms)", took.as_millis()))
}

/// Brute-force LP: basic feasible solutions for the optimum, extreme rays
/// of `{d ≥ 0, A·d = 0, Σd = 1}` for unboundedness.
fn lp_brute_force(lp: &LinearProgram<Rational>) -> SolveResult<Rational> {
    fn basic_solutions(a: &M, b: &[Rational]) -> Vec<Vec<Rational>> {
        let (m, n) = a.shape();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            if cols.len() > m {
                continue;
            }
            let sub = M::from_fn(m, cols.len(), |i, j| a[(i, cols[j])].clone());
            if rank(&sub) != cols.len() {
                continue;
            }
            if let Some(xs) = solve(&sub, b) {
                if xs.iter().all(|x| !x.is_negative()) {
                    let mut x = vec![Rational::zero(); n];
                    for (j, v) in cols.iter().zip(xs) {
                        x[*j] = v;
                    }
                    out.push(x);
                }
            }
        }
        out
    }
    let dot = |c: &[Rational], x: &[Rational]| c.iter().zip(x).map(|(a, b)| a * b).sum::<Rational>();
    let (m, n) = lp.constraints.shape();
    let vertices = basic_solutions(&lp.constraints, &lp.rhs);
    if vertices.is_empty() {
        return SolveResult::Infeasible;
    }
    let aug = M::from_fn(m + 1, n, |i, j| if i < m { lp.constraints[(i, j)].clone() } else { Rational::one() });
    let mut rhs = vec![Rational::zero(); m];
    rhs.push(Rational::one());
    if basic_solutions(&aug, &rhs).iter().any(|d| dot(&lp.objective, d).is_negative()) {
        return SolveResult::Unbounded;
    }
    let best = vertices.into_iter().min_by_key(|x| dot(&lp.objective, x)).unwrap();
    SolveResult::Optimal { value: dot(&lp.objective, &best), witness: best }
}

fn integral_brute_force(a: &DenseMatrix<i64>, b: &[i64], bound: i64) -> Option<i64> {
    let n = a.cols();
    let mut best: Option<i64> = None;
    let mut x = vec![-bound; n];
    loop {
        let norm: i64 = x.iter().map(|v| v.abs()).sum();
        if norm <= bound && best.is_none_or(|bv| norm < bv) && a.mul_vec(&x) == b {
            best = Some(norm);
        }
        let mut i = 0;
        while i < n {
            x[i] += 1;
            if x[i] <= bound {
                break;
            }
            x[i] = -bound;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut kinds = BTreeMap::new();
    for t in 0..100 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=4);
        let a = M::from_fn(m, n, |_, _| small_int(&mut rng, 4));
        let b: Vec<Rational> = if rng.gen_bool(0.8) {
            let x0: Vec<Rational> = (0..n).map(|_| q(rng.gen_range(0..=3), rng.gen_range(1..=3))).collect();
            a.mul_vec(&x0)
        } else {
            (0..m).map(|_| small_int(&mut rng, 5)).collect()
        };
        let c: Vec<Rational> = (0..n).map(|_| small_rational(&mut rng, 0.1)).collect();
        let lp = LinearProgram::new(c.clone(), a.clone(), b.clone()).unwrap();
        let got = simplex_solve(&lp);
        let want = lp_brute_force(&lp);
        let kind = match (&got, &want) {
            (SolveResult::Optimal { value, witness }, SolveResult::Optimal { value: v2, .. }) => {
                ensure(value == v2, || format!("LP {t}: {value} vs {v2}"))?;
                ensure(a.mul_vec(witness) == b && witness.iter().all(|x| !x.is_negative()), || {
                    format!("LP {t}: bad witness")
                })?;
                "optimal"
            }
            (SolveResult::Infeasible, SolveResult::Infeasible) => "infeasible",
            (SolveResult::Unbounded, SolveResult::Unbounded) => "unbounded",
            _ => return Err(format!("LP {t}: simplex {got:?}, brute force {want:?}")),
        };
        *kinds.entry(kind).or_insert(0) += 1;
    }
    for t in 0..100 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=3);
        let a = DenseMatrix::from_fn(m, n, |_, _| rng.gen_range(-3i64..=3));
        let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
        let b = a.mul_vec(&x0);
        let bound: i64 = x0.iter().map(|v| v.abs()).sum();
        let want = integral_brute_force(&a, &b, bound).expect("x0 is feasible");
        match l1_min_integral(&a, &b).map_err(|e| format!("ILP {t}: {e}"))? {
            SolveResult::Optimal { value, witness } => {
                ensure(value == q(want, 1).reduced_i64(), || format!("ILP {t}: {value} vs {want}"))?;
                let w: Vec<i64> = witness.iter().map(|v| v.to_integer()).collect();
                ensure(witness.iter().all(|v| v.is_integer()) && a.mul_vec(&w) == b, || {
                    format!("ILP {t}: bad witness")
                })?;
            }
            other => return Err(format!("ILP {t}: {other:?}")),
        }
    }
    Ok(format!("100 LPs agree with vertex enumeration {kinds:?}; 100 l1 ILPs agree with exhaustive search"))
}

trait ReducedI64 {
    fn reduced_i64(&self) -> num_rational::Ratio<i64>;
}

impl ReducedI64 for Rational {
    fn reduced_i64(&self) -> num_rational::Ratio<i64> {
        use num_traits::ToPrimitive;
        num_rational::Ratio::new(self.numer().to_i64().unwrap(), self.denom().to_i64().unwrap())
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_c = Rational::zero();
    for t in 0..50 {
        let n = rng.gen_range(1..=4);
        let r = rng.gen_range(0..=2.min(n));
        let rel = M::from_fn(n, r, |_, _| small_int(&mut rng, 3));
        let m = PresentedModule::new(n, rel.clone()).map_err(|e| e.to_string())?;
        // new generator j is scale_j times old generator perm[j]
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let scales: Vec<Rational> = (0..n)
            .map(|_| {
                let s = q(rng.gen_range(1..=3), rng.gen_range(1..=3));
                if rng.gen_bool(0.5) {
                    -s
                } else {
                    s
                }
            })
            .collect();
        // iso sends old generator perm[j] to new generator j divided by scale_j
        let iso_m = M::from_fn(n, n, |i, j| if perm[i] == j { Rational::one() / &scales[i] } else { Rational::zero() });
        let inv_m = M::from_fn(n, n, |i, j| if perm[j] == i { scales[j].clone() } else { Rational::zero() });
        let m2 = PresentedModule::new(n, iso_m.mul(&rel)).map_err(|e| e.to_string())?;
        let iso = ModuleMap::new(m.clone(), m2.clone(), iso_m).map_err(|e| format!("module {t}: {e}"))?;
        let back = ModuleMap::new(m2.clone(), m.clone(), inv_m).map_err(|e| format!("module {t}: {e}"))?;
        let c = norm_equivalence_constants(&m, &m2, &iso, &back).map_err(|e| format!("module {t}: {e}"))?;
        let bc = bounded_constant(&iso);
        ensure(c == bc.clone().max(bounded_constant(&back)), || format!("module {t}: constant mismatch"))?;
        for s in 0..50 {
            let v: Vec<Rational> = (0..n).map(|_| small_rational(&mut rng, 0.3)).collect();
            let norm = m.filling_norm(&v).unwrap();
            let image = m2.filling_norm(&iso.apply(&v).unwrap()).unwrap();
            ensure(image <= &bc * &norm, || format!("module {t} element {s}: bounded-morphism bound fails"))?;
            ensure(image <= &c * &norm && norm <= &c * &image, || {
                format!("module {t} element {s}: equivalence fails")
            })?;
        }
        if c > max_c {
            max_c = c;
        }
    }
    Ok(format!("50 modules x 50 elements certified; largest constant {max_c}"))
}

fn criterion_9() -> Outcome {
    let tables = [
        ("r5", z2_ball_table(5, CoefficientRing::Integers, 1)),
        ("r7", z2_ball_table(7, CoefficientRing::Integers, 1)),
        ("r6x2", z2_ball_table(6, CoefficientRing::Integers, 2)),
    ];
    let mut worst = 0;
    for (a, ta) in &tables {
        for (b, tb) in &tables {
            if a == b {
                continue;
            }
            let r = preceq_witness(&ta.values(), &tb.values(), 4);
            let c = r.constant.ok_or_else(|| format!("{a} is not below {b} with C <= 4"))?;
            worst = worst.max(c);
        }
    }
    let summary: Vec<String> = tables.iter().map(|(n, t)| format!("{n} [{}]", fmt_values(t))).collect();
    Ok(format!("mutually related with C <= {worst} on k <= 12 (range-limited): {}", summary.join("; ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 remark reproduction", criterion_1),
        ("2 Z^2 quadratic growth", criterion_2),
        ("3 FV_Q <= FV_Z", criterion_3),
        ("4 hyperbolic linearity evidence", criterion_4),
        ("5 subring separation", criterion_5),
        ("6 mapping-cylinder suite", criterion_6),
        ("7 LP oracle equivalence", criterion_7),
        ("8 norm calculus", criterion_8),
        ("9 well-definedness robustness", criterion_9),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
