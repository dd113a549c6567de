//! Independent ground-truth generators used by the validation tests and the
//! `compare` command: a reproducible Monte-Carlo simulator of the reflected
//! recursion, and deterministic grid quadrature of the two integral
//! identities the closed forms are derived from (position convolution and
//! exit-time conditioning).
//!
//! Nothing here touches the coefficient recursions; agreement between the
//! two routes is the evidence the closed forms are implemented correctly.

mod mc;
mod quad;

pub use mc::{sample_laplace, simulate, McConfig, McResult};
pub use quad::{ck_convolve, exit_base, exit_recursion_step, suggested_domain, ExitGrid, GridFunction};
