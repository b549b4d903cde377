//! Exact homological filling functions of finitely presented groups over
//! subrings of ℚ, together with the finite-rank module and chain-complex
//! machinery used to check them.
//!
//! The linear algebra and optimisation layers are generic over an exact
//! [`scalar::Field`]; the aliases below fix the arbitrary-precision choice
//! the rest of the crate uses.

pub mod cayley;
pub mod cylinder;
pub mod exactopt;
pub mod filling;
pub mod matrix;
pub mod normedmod;
pub mod rational;
pub mod rings;
pub mod scalar;
pub mod smith;
pub mod words;

pub type Int = num_bigint::BigInt;
pub type Rational = num_rational::BigRational;
pub type Matrix = matrix::DenseMatrix<Rational>;
pub type IntMatrix = matrix::DenseMatrix<Int>;
pub type LinearProgram = exactopt::LinearProgram<Rational>;
pub type SolveResult = exactopt::SolveResult<Rational>;
pub type ChainComplex = cylinder::ChainComplex<Rational>;
pub type ChainMap = cylinder::ChainMap<Rational>;
pub type PresentedModule = normedmod::PresentedModule<Rational>;
pub type ModuleMap = normedmod::ModuleMap<Rational>;

pub use rings::CoefficientRing;
