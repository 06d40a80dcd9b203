//! Finite-set models of locally cartesian closed categories, polynomial
//! functors and their initial algebras, and W-types in categories of
//! coalgebras for cartesian comonads.

pub mod cat;
pub mod coalg;
pub mod engine;
pub mod error;
pub mod finset;
pub mod polynomial;
pub mod sample;
pub mod scenario;
pub mod slice;
pub mod wtype;

pub use cat::{Category, Hom, Obj};
pub use error::{Error, Result};
pub use finset::{FinFn, FinSet, Value};
pub use slice::{Family, SliceCat, SliceMap};
