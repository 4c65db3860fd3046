//! Computational laboratory for Cuntz comparison of positive matrix-valued
//! functions.
//!
//! * [`space`]: finite samples of compact spaces with declared dimension.
//! * [`matfield`]: positive matrix fields, functional calculus, rank
//!   functions and well-supported approximants.
//! * [`cuntz`]: the rank-gap comparison certificate, a numerical witness
//!   search, dimension functions and the semigroup model `V ⊔ LAff`.
//! * [`rsh`]: recursive subhomogeneous decompositions and the radius of
//!   comparison bound.
//! * [`villadsen`]: exact arithmetic for Villadsen-type inductive limits and
//!   their trace-simplex intertwining.
//! * [`io`]: JSON file formats shared with the command-line front end.

pub mod exact;
pub mod linalg;
pub mod matfield;
pub mod space;
pub mod random;
pub mod cuntz;
pub mod rsh;
pub mod villadsen;
pub mod io;
