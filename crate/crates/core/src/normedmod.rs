//! Finitely presented modules over a field with the filling norm induced by
//! their generators, module maps, and their bounded-morphism constants.

use crate::exactopt::{l1_min_rational, SolveResult};
use crate::matrix::{kernel_basis, DenseMatrix};
use crate::scalar::{all_zero, Field};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModuleError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotWellDefined: the matrix does not map relations into relations")]
    NotWellDefined,
    #[error("NotInverse: the maps are not mutually inverse on classes")]
    NotInverse,
}

/// `F/⟨relations⟩` for the based free module `F = Tⁿ`. Relations are the
/// columns of an `n × r` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PresentedModule<T> {
    generator_count: usize,
    relations: DenseMatrix<T>,
    /// rows span the annihilator of the relation span, so `v ≡ w` iff
    /// `annihilator·(v − w) = 0`
    annihilator: DenseMatrix<T>,
}

impl<T: Field> PresentedModule<T> {
    pub fn new(generator_count: usize, relations: DenseMatrix<T>) -> Result<Self, ModuleError> {
        if relations.rows() != generator_count {
            return Err(ModuleError::DimensionMismatch(format!(
                "relation matrix has {} rows for {generator_count} generators",
                relations.rows()
            )));
        }
        let rows = kernel_basis(&relations.transpose());
        let annihilator = DenseMatrix::from_rows(rows, generator_count);
        Ok(PresentedModule { generator_count, relations, annihilator })
    }

    pub fn free(n: usize) -> Self {
        Self::new(n, DenseMatrix::zeros(n, 0)).expect("shapes agree")
    }

    pub fn generator_count(&self) -> usize {
        self.generator_count
    }

    pub fn relations(&self) -> &DenseMatrix<T> {
        &self.relations
    }

    fn check_len(&self, v: &[T]) -> Result<(), ModuleError> {
        if v.len() == self.generator_count {
            Ok(())
        } else {
            Err(ModuleError::DimensionMismatch(format!(
                "vector of length {} for {} generators",
                v.len(),
                self.generator_count
            )))
        }
    }

    /// `true` iff `v` and `w` represent the same element.
    pub fn equivalent(&self, v: &[T], w: &[T]) -> Result<bool, ModuleError> {
        self.check_len(v)?;
        self.check_len(w)?;
        let diff: Vec<T> = v.iter().zip(w).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(all_zero(&self.annihilator.mul_vec(&diff)))
    }

    /// `‖[v]‖ = min ‖v + relations·t‖₁`, realized as the least ℓ1 norm of a
    /// vector with the same image under the annihilator.
    pub fn filling_norm(&self, v: &[T]) -> Result<T, ModuleError> {
        self.check_len(v)?;
        let target = self.annihilator.mul_vec(v);
        match l1_min_rational(&self.annihilator, &target) {
            SolveResult::Optimal { value, .. } => Ok(value),
            _ => unreachable!("v itself is feasible"),
        }
    }

    /// A representative attaining [`Self::filling_norm`].
    pub fn minimal_representative(&self, v: &[T]) -> Result<Vec<T>, ModuleError> {
        self.check_len(v)?;
        let target = self.annihilator.mul_vec(v);
        match l1_min_rational(&self.annihilator, &target) {
            SolveResult::Optimal { witness, .. } => Ok(witness),
            _ => unreachable!("v itself is feasible"),
        }
    }
}

/// A map of presented modules given on generators: column `j` is the image
/// of the `j`-th source generator in the target's free cover.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleMap<T> {
    source: PresentedModule<T>,
    target: PresentedModule<T>,
    matrix: DenseMatrix<T>,
}

impl<T: Field> ModuleMap<T> {
    /// Rejects matrices that do not send source relations into the target's relation span.
    pub fn new(
        source: PresentedModule<T>,
        target: PresentedModule<T>,
        matrix: DenseMatrix<T>,
    ) -> Result<Self, ModuleError> {
        if matrix.shape() != (target.generator_count, source.generator_count) {
            return Err(ModuleError::DimensionMismatch(format!(
                "matrix is {:?}, expected {:?}",
                matrix.shape(),
                (target.generator_count, source.generator_count)
            )));
        }
        if !target.annihilator.mul(&matrix).mul(&source.relations).is_zero() {
            return Err(ModuleError::NotWellDefined);
        }
        Ok(ModuleMap { source, target, matrix })
    }

    pub fn identity(m: &PresentedModule<T>) -> Self {
        let n = m.generator_count;
        ModuleMap { source: m.clone(), target: m.clone(), matrix: DenseMatrix::identity(n) }
    }

    pub fn source(&self) -> &PresentedModule<T> {
        &self.source
    }

    pub fn target(&self) -> &PresentedModule<T> {
        &self.target
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>, ModuleError> {
        self.source.check_len(v)?;
        Ok(self.matrix.mul_vec(v))
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ModuleMap<T>) -> Result<ModuleMap<T>, ModuleError> {
        if other.source.generator_count != self.target.generator_count {
            return Err(ModuleError::DimensionMismatch("composable maps need matching modules".into()));
        }
        Ok(ModuleMap {
            source: self.source.clone(),
            target: other.target.clone(),
            matrix: other.matrix.mul(&self.matrix),
        })
    }

    /// `true` iff the map is the identity on classes of its source.
    pub fn is_identity_on_classes(&self) -> bool {
        self.source.generator_count == self.target.generator_count
            && (0..self.source.generator_count).all(|j| {
                let image = self.matrix.column(j);
                let mut e = vec![T::zero(); self.source.generator_count];
                e[j] = T::one();
                self.target.equivalent(&image, &e).expect("lengths agree")
            })
    }
}

/// `C = max_a ‖f(a)‖` over source generators `a`, so `‖f(m)‖ ≤ C·‖m‖`.
pub fn bounded_constant<T: Field>(f: &ModuleMap<T>) -> T {
    (0..f.source.generator_count)
        .map(|j| f.target.filling_norm(&f.matrix.column(j)).expect("column length matches target"))
        .max()
        .unwrap_or_else(T::zero)
}

/// `C` with `C⁻¹‖m‖ ≤ ‖iso(m)‖′ ≤ C‖m‖`, after checking that the two maps
/// are mutually inverse on classes.
pub fn norm_equivalence_constants<T: Field>(
    m: &PresentedModule<T>,
    m2: &PresentedModule<T>,
    iso: &ModuleMap<T>,
    iso_inv: &ModuleMap<T>,
) -> Result<T, ModuleError> {
    let shapes_ok = iso.source.generator_count == m.generator_count
        && iso.target.generator_count == m2.generator_count
        && iso_inv.source.generator_count == m2.generator_count
        && iso_inv.target.generator_count == m.generator_count;
    if !shapes_ok {
        return Err(ModuleError::DimensionMismatch("iso and iso_inv must run between the two modules".into()));
    }
    let there = ModuleMap::new(m.clone(), m2.clone(), iso.matrix.clone())?;
    let back = ModuleMap::new(m2.clone(), m.clone(), iso_inv.matrix.clone())?;
    if !there.then(&back)?.is_identity_on_classes() || !back.then(&there)?.is_identity_on_classes() {
        return Err(ModuleError::NotInverse);
    }
    Ok(bounded_constant(&there).max(bounded_constant(&back)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rational};
    use crate::Rational;
    use num_traits::Signed;
    use proptest::prelude::*;

    type M = DenseMatrix<Rational>;

    fn col(v: &[i64]) -> M {
        M::from_columns(&[v.iter().map(|&x| int(x)).collect()], v.len())
    }

    fn quotient() -> PresentedModule<Rational> {
        PresentedModule::new(2, col(&[1, -1])).unwrap()
    }

    fn scalar_map(m: &PresentedModule<Rational>, q: Rational) -> ModuleMap<Rational> {
        let n = m.generator_count();
        ModuleMap::new(m.clone(), m.clone(), M::identity(n).scale(&q)).unwrap()
    }

    #[test]
    fn filling_norm_examples() {
        let free = PresentedModule::<Rational>::free(2);
        assert_eq!(free.filling_norm(&[int(1), int(0)]).unwrap(), int(1));
        let q = quotient();
        assert_eq!(q.filling_norm(&[int(1), int(0)]).unwrap(), int(1));
        assert_eq!(q.filling_norm(&[int(1), int(1)]).unwrap(), int(2));
        assert_eq!(q.filling_norm(&[int(1), int(-1)]).unwrap(), int(0));
        assert!(q.equivalent(&[int(1), int(0)], &[int(0), int(1)]).unwrap());
        assert!(matches!(q.filling_norm(&[int(1)]), Err(ModuleError::DimensionMismatch(_))));
    }

    #[test]
    fn bounded_constant_examples() {
        let free = PresentedModule::<Rational>::free(1);
        assert_eq!(bounded_constant(&ModuleMap::identity(&free)), int(1));
        assert_eq!(bounded_constant(&scalar_map(&free, int(0))), int(0));
        assert_eq!(bounded_constant(&scalar_map(&free, int(3))), int(3));
    }

    #[test]
    fn equivalence_examples() {
        let free = PresentedModule::<Rational>::free(2);
        let id = ModuleMap::identity(&free);
        assert_eq!(norm_equivalence_constants(&free, &free, &id, &id).unwrap(), int(1));

        let one = PresentedModule::<Rational>::free(1);
        let c = norm_equivalence_constants(&one, &one, &scalar_map(&one, int(2)), &scalar_map(&one, rational(1, 2)))
            .unwrap();
        assert_eq!(c, int(2));

        let q = quotient();
        let swap = M::from_rows(vec![vec![int(0), int(1)], vec![int(1), int(0)]], 2);
        let s = ModuleMap::new(q.clone(), q.clone(), swap).unwrap();
        assert_eq!(norm_equivalence_constants(&q, &q, &s, &s).unwrap(), int(1));

        let bad = scalar_map(&one, int(3));
        assert_eq!(norm_equivalence_constants(&one, &one, &bad, &bad), Err(ModuleError::NotInverse));
    }

    #[test]
    fn ill_defined_maps_are_rejected() {
        let q = quotient();
        let free = PresentedModule::<Rational>::free(2);
        // ℚ²/(1,−1) → ℚ² by the identity is not well defined
        assert_eq!(ModuleMap::new(q, free, M::identity(2)).unwrap_err(), ModuleError::NotWellDefined);
    }

    #[test]
    fn free_projection_and_inclusion() {
        let f3 = PresentedModule::<Rational>::free(3);
        let f2 = PresentedModule::<Rational>::free(2);
        let proj = ModuleMap::new(
            f3.clone(),
            f2.clone(),
            M::from_rows(vec![vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]], 3),
        )
        .unwrap();
        let incl = ModuleMap::new(f2.clone(), f3.clone(), proj.matrix().transpose()).unwrap();
        assert_eq!(bounded_constant(&proj), int(1));
        let v = [int(3), rational(-1, 2)];
        assert_eq!(f3.filling_norm(&incl.apply(&v).unwrap()).unwrap(), f2.filling_norm(&v).unwrap());
    }

    fn small() -> impl Strategy<Value = Rational> {
        (-9i64..=9, 1i64..=9).prop_map(|(n, d)| rational(n, d))
    }

    fn module() -> impl Strategy<Value = PresentedModule<Rational>> {
        (1usize..=4, 0usize..=2).prop_flat_map(|(n, r)| {
            proptest::collection::vec(proptest::collection::vec(small(), n), r)
                .prop_map(move |cols| PresentedModule::new(n, M::from_columns(&cols, n)).unwrap())
        })
    }

    fn module_and_vecs() -> impl Strategy<Value = (PresentedModule<Rational>, Vec<Rational>, Vec<Rational>, Rational)> {
        module().prop_flat_map(|m| {
            let n = m.generator_count();
            (Just(m), proptest::collection::vec(small(), n), proptest::collection::vec(small(), n), small())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_axioms((m, v, w, q) in module_and_vecs()) {
            let nv = m.filling_norm(&v).unwrap();
            let nw = m.filling_norm(&w).unwrap();
            prop_assert!(nv >= int(0));
            let sum: Vec<Rational> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            prop_assert!(m.filling_norm(&sum).unwrap() <= &nv + &nw);
            let scaled: Vec<Rational> = v.iter().map(|a| a * &q).collect();
            prop_assert_eq!(m.filling_norm(&scaled).unwrap(), nv.clone() * q.abs());
            let rep = m.minimal_representative(&v).unwrap();
            prop_assert!(m.equivalent(&rep, &v).unwrap());
            prop_assert_eq!(crate::scalar::l1_norm(&rep), nv);
        }

        #[test]
        fn bounded_morphism_certificate((m, v, w, q) in module_and_vecs()) {
            let n = m.generator_count();
            let perm = M::from_fn(n, n, |i, j| if (i + 1) % n == j { q.clone() } else if i == j { int(1) } else { int(0) });
            // images of relations land back in the relation span only for special matrices, so use r ↦ q·r
            let scaled = M::identity(n).scale(&q);
            let f = ModuleMap::new(m.clone(), m.clone(), scaled).unwrap();
            let c = bounded_constant(&f);
            for x in [&v, &w] {
                let fx = f.apply(x).unwrap();
                prop_assert!(m.filling_norm(&fx).unwrap() <= &c * m.filling_norm(x).unwrap());
            }
            let free = PresentedModule::<Rational>::free(n);
            let g = ModuleMap::new(free.clone(), free.clone(), perm).unwrap();
            let cg = bounded_constant(&g);
            let gv = g.apply(&v).unwrap();
            prop_assert!(free.filling_norm(&gv).unwrap() <= cg * free.filling_norm(&v).unwrap());
        }
    }
}
