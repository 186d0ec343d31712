//! Laurent series over exact, complex and p-adic fields, Birkhoff
//! factorization, local symbols, a finite-window determinant-line oracle,
//! and reciprocity checks for units on the projective line.

pub mod contour;
pub mod curves;
pub mod detline;
pub mod factorization;
pub mod json;
pub mod laurent;
pub mod linalg;
pub mod scalars;
pub mod symbols;

pub use curves::{
    local_expansion, local_symbol, support, verify_reciprocity, AnalyticUnit, CurveError, LocalOpts, Method,
    PointOnLine, ReciprocityReport,
};
pub use detline::{
    block_sum_check, compression_index, graded_mul, oracle_commutator, plus_compression, segal_cocycle,
    Compression, GradedLine, OracleError, OracleOpts,
};
pub use factorization::{
    birkhoff_factor, recompose, winding_number_contour, BirkhoffFactorization, FactorError, FactorOpts, Locality,
};
pub use laurent::{LaurentSeries, SeriesError};
pub use scalars::{FieldTag, PAdic, Scalar, ScalarError};
pub use symbols::{
    deligne_symbol, minus_symbol, plus_symbol, tame_symbol, SymbolError, SymbolMethod, SymbolValue,
};
