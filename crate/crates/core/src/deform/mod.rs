//! Deformation of cycles through the nerve of a covering and the
//! piecewise-minimizing approximation built from it.

pub mod affine;
pub mod approx;
pub mod displace;

pub use affine::{
    piece_volume, radial_deform, round_to_vertices, signed_multiplicities, skeleton_reduce, AffineChain, BaryPoint,
    PointTable, RadialStep, SimplicialChain, SkeletonStats,
};
pub use displace::{
    displacement_decompose, kuhn_simplices, CellChainMap, DisplacementDecomposition, DisplacementStats, Homotopy,
    IdentityMap, NerveRounding,
};
pub use approx::{pm_approximate, pm_approximate_with, ApproxConstants, ApproxOptions, ApproxResult, Remainder, RemainderKind, TraceLine};

#[cfg(test)]
mod tests;
