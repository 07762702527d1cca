//! Numerical machinery for half-integral weight Poincaré series on the
//! metaplectic double cover of SL₂(ℝ).
//!
//! The crate is organized around five layers:
//!
//! * [`mp2`] — exact-as-possible arithmetic in the metaplectic group Mp₂:
//!   elements carry a holomorphic square-root branch η with η²(z) = cz + d,
//!   Iwasawa coordinates, the weight-m slash action, and the classical lift
//!   of functions on the upper half-plane to functions on the group.
//! * [`groups`] — concrete discrete subgroups: theta lifts of congruence
//!   groups Γ₀(4M) with Dirichlet character data, coset enumeration for the
//!   cusp at ∞, and the derived invariants (cusp width, minimal |c|, center).
//! * [`special`] — complex gamma, incomplete gamma, the gamma-distribution
//!   median with bracketing bounds, and identity self-tests.
//! * [`kernels`] — the kernel series F(z,s), classical and kernel-seeded
//!   Poincaré series with certified truncation estimates, Fourier-coefficient
//!   extraction, Petersson pairings, and L-values in Dirichlet-series and
//!   unfolded-integral form.
//! * [`certificates`] — machine-checkable non-vanishing certificates: gauge
//!   machinery, region integrals with analytic sandwich bounds, inequality
//!   checks with explicit margins, and the minimal-weight scan.
//!
//! All evaluators are pure and thread-safe; parallel reductions use a fixed
//! pairwise order so results do not depend on the number of threads.

pub mod certificates;
pub mod groups;
pub mod kernels;
pub mod mp2;
pub mod quad;
pub mod special;

pub use num_complex::Complex64;
