//! Reduced biquaternion (RB) tensor algebra.
//!
//! Every RB number `a + bi + cj + dk` is stored through the orthogonal
//! idempotent split `q = q_c1 e1 + q_c2 e2` with `e1 = (1 + j) / 2` and
//! `e2 = (1 - j) / 2`. Products, conjugate transposes, SVDs and DFTs then act
//! independently on two ordinary complex channels, which is what the whole
//! crate leans on:
//!
//! - [`scalar`]: scalar arithmetic and the 4x4 real representation.
//! - [`matrix`]: dense RB matrices, RBSVD, rank, nuclear norm, thresholding.
//! - [`tensor`]: dense N-th order tensors, unfoldings, folds and masks.
//! - [`ring`]: tensor-ring cores, subchains and the RBTR-SVD decomposition.
//! - [`completion`]: the RBTR-TV ADMM completion solver.
//! - [`imaging`]: colour image / video conversion, ket augmentation, metrics.
//! - [`format`]: the `RBT1` binary tensor format and mask blobs.

pub mod completion;
pub mod error;
pub mod format;
pub mod imaging;
pub mod matrix;
pub mod ring;
pub mod scalar;
pub mod svd;
pub mod tensor;

pub use completion::{solve, CompletionConfig, CompletionState, SolveReport};
pub use error::{Channel, RbError, Result};
pub use matrix::{RbMatrix, RbSvd};
pub use ring::{rbtr_svd, TrCores};
pub use scalar::RbScalar;
pub use tensor::{IndexMask, RbTensor};
