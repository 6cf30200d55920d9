//! Leray residue calculus on abstract CR manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: exact symbolic scalars over real chart coordinates;
//! * [`forms`]: differential forms, vector fields and smooth maps;
//! * [`cr`]: CR charts, integrability and polar submanifold checks;
//! * [`residue`]: decomposition against a defining function, residue forms,
//!   pole reduction, Laurent chains and iterated residues;
//! * [`chains`]: parametrized chains, tubes, quadrature and the global
//!   residue sum;
//! * [`lang`]: typed evaluation of the expression grammar, shared with the
//!   command-line manifest reader.

pub mod coords;
pub mod chains;
pub mod cr;
pub mod error;
pub mod expr;
pub mod forms;
pub mod lang;
pub mod linalg;
pub mod quadrature;
pub mod residue;

pub use coords::{ComplexCoord, Coordinates};
pub use error::{Error, Result};
pub use expr::{Coeff, Expr, SampleDomain, ZeroVerdict};
pub use forms::{Blade, DifferentialForm, SmoothMap, VectorField};
pub use cr::{CRChart, PolarSubmanifold};
pub use chains::{Cell, Chain, TubeSpec};
pub use residue::{AdaptedFrame, Divisor, ResidueResult, SemiMeromorphicForm};
