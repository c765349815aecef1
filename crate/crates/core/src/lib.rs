//! Structured symmetric tensors of the MO family.
//!
//! Every tensor in the family `M(n,m) - alpha * N(n,m)` has an exact
//! representation as a weighted sum of symmetric rank-one terms, so the
//! homogeneous form `A x^m` and the vector `A x^{m-1}` cost `O(n * terms)`
//! instead of `O(n^m)`. Dense tensors exist for small instances and serve as
//! ground truth in [`oracle`].
//!
//! Modules:
//! - [`tensor`]: rank-one sums, evaluation, m-norms
//! - [`dense`]: permutation-symmetric dense storage and JSON export
//! - [`family`]: Moler matrix, `M`, `N`, MO, essential MO, CP certificates
//! - [`supmo`]: the convex inner problem, its fixed point and the Sup-MO value
//! - [`heigen`]: smallest H-eigenvalue estimation and KKT certification
//! - [`oracle`]: brute-force checks on small instances
//! - [`verify`]: bundled identity checks

pub mod dense;
pub mod error;
pub mod family;
pub mod heigen;
pub mod oracle;
pub mod supmo;
pub mod tensor;
pub mod verify;

mod rng;

pub use dense::{DenseExport, DenseSymmetricTensor, DEFAULT_DENSE_BUDGET};
pub use error::{Error, Result};
pub use family::{
    cp_certificate, entry, entry_exact, essential_mo, m_tensor, mo_tensor, moler_factor,
    moler_matrix, n_tensor, sub_mo_witness_value, CpCertificate, EssentialMo, FamilyKind,
    FamilySpec,
};
pub use heigen::{
    kkt_residual, lambda_min_curve, lambda_min_estimate, moler_lambda_min, witness_upper_bound,
    EstimatorOptions, HEigenPair, LambdaCurve,
};
pub use supmo::{
    alpha_star, f_monotonicity_probe, fixed_point_beta, g_grad_hess, g_value, inner_minimize,
    AlphaStarOptions, BetaSolveTrace, InnerSolveResult, RootMode,
};
pub use tensor::{format_real, m_norm, HomogeneousForm, RankOneSum, RankOneTerm};
