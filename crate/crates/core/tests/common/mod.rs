#![allow(dead_code)]

use fillvol::cylinder::{ChainComplex, ChainMap};
use fillvol::matrix::{inverse, kernel_basis, DenseMatrix};
use fillvol::{Int, Rational};
use rand::Rng;

pub type M = DenseMatrix<Rational>;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(Int::from(n), Int::from(d))
}

/// `p/q` with `|p| ≤ 9`, `1 ≤ q ≤ 9`, zero with probability `zero_bias`.
pub fn small_rational(rng: &mut impl Rng, zero_bias: f64) -> Rational {
    if rng.gen_bool(zero_bias) {
        return q(0, 1);
    }
    q(rng.gen_range(-9..=9), rng.gen_range(1..=9))
}

pub fn small_int(rng: &mut impl Rng, bound: i64) -> Rational {
    q(rng.gen_range(-bound..=bound), 1)
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, zero_bias: f64) -> M {
    M::from_fn(r, c, |_, _| small_rational(rng, zero_bias))
}

pub fn entries_small(m: &M) -> bool {
    (0..m.rows()).all(|i| m.row(i).iter().all(|x| x.numer().magnitude() <= &9u32.into() && x.denom() <= &Int::from(9)))
}

/// A complex of the given ranks whose `dᵢ` has columns in `ker dᵢ₋₁`.
pub fn random_complex(rng: &mut impl Rng, ranks: &[usize]) -> ChainComplex<Rational> {
    let mut diffs: Vec<M> = Vec::new();
    for i in 1..ranks.len() {
        let d = if i == 1 {
            random_matrix(rng, ranks[0], ranks[1], 0.4)
        } else {
            let prev = &diffs[i - 2];
            let kernel = kernel_basis(prev);
            let k = M::from_columns(&kernel, ranks[i - 1]);
            let r = M::from_fn(kernel.len(), ranks[i], |_, _| small_int(rng, 1));
            k.mul(&r)
        };
        diffs.push(d);
    }
    ChainComplex::new(ranks.to_vec(), diffs).expect("kernel construction gives a complex")
}

fn direct_sum(a: &ChainComplex<Rational>, b: &ChainComplex<Rational>) -> ChainComplex<Rational> {
    let n = a.len().max(b.len());
    let ranks: Vec<usize> = (0..n).map(|i| a.rank(i) + b.rank(i)).collect();
    let diffs = (1..n)
        .map(|i| {
            let mut d = M::zeros(ranks[i - 1], ranks[i]);
            d.set_block(0, 0, &a.differential(i));
            d.set_block(a.rank(i - 1), a.rank(i), &b.differential(i));
            d
        })
        .collect();
    ChainComplex::new(ranks, diffs).unwrap()
}

/// A random chain map `f: B → C`: `C = (B ⊕ D)` twisted by one elementary
/// automorphism per degree, `f = P·(s·ι + d′h + hd)`.
pub fn random_chain_map_unbounded(rng: &mut impl Rng, max_rank: usize, max_len: usize) -> ChainMap<Rational> {
    let len = rng.gen_range(1..=max_len);
    let b_ranks: Vec<usize> = (0..len).map(|_| rng.gen_range(0..=max_rank / 2 + 1).min(max_rank)).collect();
    let d_ranks: Vec<usize> = b_ranks.iter().map(|&r| rng.gen_range(0..=max_rank - r)).collect();
    let b = random_complex(rng, &b_ranks);
    let d = random_complex(rng, &d_ranks);
    let sum = direct_sum(&b, &d);

    let mut p: Vec<M> = Vec::new();
    for i in 0..len {
        let r = sum.rank(i);
        let mut e = M::identity(r);
        if r >= 2 {
            let a = rng.gen_range(0..r);
            let mut c = rng.gen_range(0..r - 1);
            if c >= a {
                c += 1;
            }
            e[(a, c)] = small_int(rng, 2);
        }
        p.push(e);
    }
    let p_inv: Vec<M> = p.iter().map(|m| inverse(m).unwrap()).collect();
    let c_diffs = (1..len).map(|i| p[i - 1].mul(&sum.differential(i)).mul(&p_inv[i])).collect();
    let c = ChainComplex::new(sum.ranks().to_vec(), c_diffs).unwrap();

    let s = small_int(rng, 2);
    // hᵢ: Bᵢ → (B ⊕ D)ᵢ₊₁
    let h: Vec<M> = (0..len).map(|i| random_matrix(rng, sum.rank(i + 1), b.rank(i), 0.7)).collect();
    let comps = (0..len)
        .map(|i| {
            let mut base = M::zeros(sum.rank(i), b.rank(i));
            base.set_block(0, 0, &M::identity(b.rank(i)).scale(&s));
            let dh = sum.differential(i + 1).mul(&h[i]);
            let hd = if i == 0 { M::zeros(sum.rank(0), b.rank(0)) } else { h[i - 1].mul(&b.differential(i)) };
            p[i].mul(&base.add(&dh).add(&hd))
        })
        .collect();
    ChainMap::new(b, c, comps).unwrap()
}

fn map_entries_small(f: &ChainMap<Rational>) -> bool {
    let (b, c) = (f.source(), f.target());
    (0..f.components().len()).all(|i| entries_small(&f.component(i)))
        && (1..b.len()).all(|i| entries_small(&b.differential(i)))
        && (1..c.len()).all(|i| entries_small(&c.differential(i)))
}

/// [`random_chain_map_unbounded`] resampled until every entry of both
/// differentials and of `f` has numerator and denominator at most 9.
pub fn random_chain_map(rng: &mut impl Rng, max_rank: usize, max_len: usize) -> ChainMap<Rational> {
    loop {
        let f = random_chain_map_unbounded(rng, max_rank, max_len);
        if map_entries_small(&f) {
            return f;
        }
    }
}
