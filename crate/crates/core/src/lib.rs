//! U-statistics on row-column exchangeable (RCE) matrices.
//!
//! An RCE matrix is a random matrix whose law is invariant under separate
//! permutations of rows and columns; under dissociation it admits an AHK
//! representation `Y[i][j] = phi(xi_i, eta_j, zeta_ij)` with i.i.d. uniform
//! latents. A U-statistic averages a symmetric kernel `h` of a `p x q`
//! submatrix over all row/column index subsets.
//!
//! This crate implements the graph-indexed orthogonal decomposition of such
//! U-statistics: every labeled bipartite graph `G` names a set of latents
//! `H(G)` and a projection `p^G`, the decomposition is orthogonal across
//! graphs, and the smallest graphs with non-vanishing projection (the
//! principal support graphs) determine the convergence rate `N^{d/2}` and,
//! when connected, a Gaussian limit with computable variance.
//!
//! Modules:
//! - [`graph`]: bipartite graphs as edge bitmasks, canonical forms,
//!   automorphisms, the isomorphism-class catalogs and the pair-coincidence
//!   counting identity.
//! - [`kernels`]: kernel specifications, the built-in kernels `h1`..`h6`,
//!   symmetrization.
//! - [`models`]: Gaussian i.i.d., Poisson-BEDD and overdispersed
//!   Poisson-BEDD samplers in AHK form, with conditional resampling.
//! - [`ustat`]: exact, fast (O(mn)) and ordered-tuple U-statistic evaluation.
//! - [`decomp`]: projection plans over the labeled-subgraph lattice, Monte
//!   Carlo moments of projections, principal-support detection, closed-form
//!   conditional-expectation oracles.
//! - [`asymptotics`]: variance tables, finite-size and asymptotic variances,
//!   unbalanced regimes and the test statistics `Z^A`, `Z^B`, `Z^B'`, `Z^C`.
//! - [`experiments`]: the batch harness behind the CLI (`qq`, `power`,
//!   `rate`, `verify`) with reproducible manifests.

pub mod asymptotics;
pub mod decomp;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernels;
pub mod mat;
pub mod models;
pub mod rng;
pub mod stats;
pub mod ustat;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, Catalog, GraphClass};
pub use kernels::KernelSpec;
pub use mat::Mat;
pub use models::{AhkSample, DegreeFunction, ModelSpec};
pub use ustat::{UStatPath, UStatResult};
