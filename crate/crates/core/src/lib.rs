//! Symmetry-reduced semidefinite hierarchy for the entanglement fidelity of a
//! quantum channel.
//!
//! The level-`n` program optimizes over states on `A ⊗ Ā ⊗ (B B̄)^{⊗n}` that
//! are invariant under permutations of the `n` copies of `B B̄`. Instead of
//! working with the exponentially large dense operator, this crate
//! parametrizes the invariant algebra by orbit count matrices, block
//! diagonalizes it with semistandard Young tableaux, and assembles a
//! semidefinite program whose size is polynomial in `n`.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature for faster
//! dense kernels; file formats and the command-line tool live in the `chanfid`
//! companion crate.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex matrices, Kronecker products, partial traces,
//!   Hermitian eigenvalues.
//! - [`channels`]: Choi matrices, Kraus validation, built-in channel families.
//! - [`symrep`]: partitions, semistandard tableaux and the integer Gram
//!   polynomials that give the block-diagonalization pairings.
//! - [`orbitbasis`]: orbit keys of the invariant algebra and their partial
//!   trace expansions.
//! - [`reduction`]: assembly of the reduced program.
//! - [`sdpsolve`]: interior-point and splitting solvers for block SDPs.
//! - [`oracle`]: dense brute-force constructions used to certify the
//!   reduction at small `n`.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod math;

pub mod channels;
pub mod linalg;
pub mod oracle;
pub mod orbitbasis;
pub mod reduction;
pub mod sdpsolve;
pub mod symrep;

pub use num_complex::Complex64;

pub use channels::{
    BuiltinChannel, ChannelError, ChannelRepr, ChannelSpec, ChoiMatrix, CptpReport,
};
pub use linalg::{ComplexMatrix, LinalgError, SystemShape};
pub use orbitbasis::{BasisElement, InvariantOperator, OrbitKey};
pub use reduction::{Dims, Field, ReducedSdp, ReductionError};
pub use sdpsolve::{BlockSdp, SolveError, SolveResult, SolveStatus};
pub use symrep::{Partition, Tableau};
