#pragma once

#include "degen/jacobian.hpp"
#include "degen/network.hpp"

namespace degen {

enum class GramKind { Activation, JacobianK, JacobianM };

std::string gram_kind_name(GramKind k);

/// Dataset-averaged outer-product matrix: G^l of activations, K^l of
/// Jacobians w.r.t. preactivations, or M^l of Jacobians w.r.t. activations.
struct GramMatrix {
    Matrix matrix;
    GramKind kind = GramKind::Activation;
    int layer = 0;
    int n = 0;
};

/// Eigendecomposition of a symmetric PSD Gram matrix. Eigenvalues are sorted
/// descending; eigenvectors() row i corresponds to eigenvalue i.
struct Spectrum {
    Vector eigenvalues;
    Matrix eigenvectors;  // rows are eigenvectors
    double rank_tol = 1e-8;
    int numerical_rank = 0;
};

inline constexpr double kDefaultRankTol = 1e-8;

/// G^l = (1/n) sum_x f^l(x) f^l(x)^T, bias coordinate included (uncentered).
GramMatrix activation_gram(const ForwardTrace& trace, int layer);

/// (1/n) sum_x sum_k J_k J_k^T for Jacobians targeting the final layer.
/// Mode K expects preactivation-coordinate Jacobians, mode M activation-
/// coordinate ones.
GramMatrix jacobian_gram(const JacobianSet& jacs, GramKind mode);

/// Convenience: K^l or M^l computed directly from the net. For mode M,
/// include_bias adds the constant coordinate of f^l as a column.
GramMatrix jacobian_gram(const Network& net, const ForwardTrace& trace, int layer, GramKind mode,
                         bool include_bias = true);

/// Symmetric eigendecomposition with relative-threshold numerical rank.
/// Eigenvalues in (-1e-10 * max, 0) are clipped to 0; more negative values
/// raise a PSD-violation error.
Spectrum spectrum(const GramMatrix& gram, double rank_tol = kDefaultRankTol);
Spectrum spectrum(const Matrix& symmetric, double rank_tol = kDefaultRankTol);

int numerical_rank(const Vector& descending_eigenvalues, double rank_tol);

}  // namespace degen
