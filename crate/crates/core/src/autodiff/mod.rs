//! Reverse-mode differentiation over dense tensors.
//!
//! A [`Tape`] records every operation in creation order. Values live on the
//! tape and are addressed by [`Var`] handles; one call to
//! [`Tape::backward`] fills gradients for every node that depends on a
//! [`Tape::leaf`].
//!
//! The op set is first-order only. Second-order quantities the regularizers
//! need (derivatives of the decoder Jacobian) are expressed by building the
//! Jacobian itself out of ordinary ops such as [`Tape::elu_prime`].

mod tape;
mod tensor;

pub(crate) use tape::{det_closed, sym2_eigvals};
pub use tape::{det_lu, elu, elu_prime, Tape, Var};
pub use tensor::Tensor;
