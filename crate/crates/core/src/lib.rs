//! Lattice point counting in dilated, translated rectangles.
//!
//! Exact counts and their error term, the Fourier-side sums that
//! approximate it, diagonal-orbit central limit statistics, the exact
//! sawtooth law of `Z^2`, quadrature oracles and a seeded Monte Carlo
//! harness tying them together.

pub mod error;
pub mod counting;
pub mod lattice;
pub mod numeric;
pub mod orbit;
pub mod oracles;
pub mod spectral;
pub mod experiments;
pub mod zsquare;

pub use error::{LatlabError, Result};
pub use lattice::{
    construct_lattice, enumerate_vectors, num_of_lattice, sample_haar_lattice_2d, FreqVector,
    LatticeBasis, LatticeKind, LatticeSpec, QuadraticPair, VectorFilter,
};
pub use counting::{count_error, count_points, RectWindow, TorusPoint};
pub use experiments::{DensitySpec, ExperimentConfig, MomentReport};
pub use oracles::IntegralRegionSpec;
pub use orbit::{OrbitStats, SignModel};
pub use spectral::{SpectralSums, TruncationSpec};
pub use zsquare::BetaMixture;
