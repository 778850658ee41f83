//! Three-dimensional resolvent bounds: weighted HS norms of the free
//! resolvent and its perturbations, `S₀` invertibility, Neumann thresholds,
//! iterated Kato integrals, oscillatory decay regimes and Fourier-side
//! kernel bounds.

pub mod fit;
pub mod ft_kernel;
pub mod hs;
pub mod kato;
pub mod oscillatory;
pub mod s0;

pub use hs::{b_kernel_norm, b_kernel_rate, bprime_norm, g_function_norm, hs_norm_r0, HsNorm, McSpec, Weights};
