#pragma once

#include "degen/spectral.hpp"

namespace degen {

enum class IBasisMode { Global, Local };

std::string ibasis_mode_name(IBasisMode m);

/// Per-layer interaction-basis transform acting on the bias-extended
/// activation vector: f_hat^l = C^l f^l with
/// C = S * V_r * D_G_r^{-1/2} * U_r. S is (D_M^{1/2})^+ in global mode and
/// D_M^{1/2} in local mode (the local scaling keeps the transformed Gram
/// diagonal, which is what makes the layer recursion close on linear nets).
struct LayerBasis {
    int layer = 0;
    IBasisMode mode = IBasisMode::Local;

    Matrix U;       // rows: retained eigenvectors of G^l (rank_G x D)
    Vector d_G;     // their eigenvalues, descending
    Matrix V;       // rows: retained eigenvectors of the whitened M (retained x rank_G)
    Vector d_M;     // whitened-M eigenvalues on the G-retained subspace, descending
    Matrix C;       // composite transform (retained x D), rows sign-fixed

    int rank_G = 0;
    int retained = 0;       // = rank of whitened M (= rank_G at the final layer)
    bool pca_fallback = false;  // final layer: C = retained PCA rows of G
};

/// Basis for one layer. Local mode recurses from the output layer, so it
/// internally computes every layer above `layer` anyway.
LayerBasis interaction_basis(const Network& net, const Dataset& data, int layer, IBasisMode mode,
                             double rank_tol = kDefaultRankTol);

/// Bases for all activation layers 0..L (layer L is the PCA fallback).
std::vector<LayerBasis> interaction_basis_all(const Network& net, const Dataset& data,
                                              IBasisMode mode,
                                              double rank_tol = kDefaultRankTol);

struct TransformReport {
    std::vector<Matrix> transitions;       // per weight layer, ret_{l+1} x ret_l (least squares)
    std::vector<double> off_diagonal_ratio;  // sum off-diag^2 / sum total^2
    // max relative column deviation between f_hat^{l+1} and f_hat^l up to
    // per-coordinate sign; NaN when retained dims differ
    std::vector<double> fhat_deviation;
    double max_off_diagonal_ratio = 0.0;
};

/// Layer-transition matrices in the new coordinates, fitted on the data.
TransformReport transform_network(const Network& net, const std::vector<LayerBasis>& bases,
                                  const Dataset& data);

struct InvarianceReport {
    Matrix R;
    std::vector<double> similarities;  // matched |cosine| per basis vector
    std::vector<bool> degenerate;      // vector sat inside a repeated-eigenvalue cluster
    double spectrum_rel_err = 0.0;     // whitened-M eigenvalue mismatch
    double condition_number = 0.0;
};

/// Recompute the basis after f -> R f on the non-bias coordinates of `layer`
/// (grams transformed as G -> R G R^T, M -> R^{-T} M R^{-1}) and match basis
/// vectors by eigenvalue order. Inside degenerate eigenvalue clusters
/// (relative gap < 1e-6) similarities are principal-angle cosines.
InvarianceReport invariance_check(const Network& net, const Dataset& data, int layer,
                                  const Matrix& R, double rank_tol = kDefaultRankTol);

}  // namespace degen
