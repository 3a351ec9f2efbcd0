#pragma once

#include "degen/spectral.hpp"
#include "degen/sync.hpp"
#include "degen/zoo.hpp"

namespace degen {

/// MSE distance between the functions implemented by two networks on a
/// dataset: (1/n) sum_x ||f_net(x) - f_ref(x)||^2.
double behavioral_loss(const Network& net, const Network& ref, const Dataset& data);

/// Behavioral loss with precomputed reference outputs.
double behavioral_loss(const Network& net, const Matrix& ref_outputs, const Dataset& data);

// The assembled Hessian carries the literal second derivative of the
// behavioral loss; the factor 2 from differentiating the squared norm is
// kept explicit.
inline constexpr double kHessianConventionFactor = 2.0;
inline constexpr int kMaxExactHessianParams = 2000;

struct HessianResult {
    Matrix matrix;
    std::vector<int> layers;        // layer indices included, ascending
    std::vector<int> offsets;       // flat offset of each included layer
    double convention_factor = kHessianConventionFactor;
};

/// Exact behavioral-loss Hessian at theta = theta* via the Gram of weight
/// gradients: H = (2/n) sum_x sum_k g g^T.
HessianResult exact_hessian(const Network& net, const Dataset& data);
HessianResult exact_hessian(const Network& net, const Dataset& data, std::vector<int> layers);

/// Kronecker-factored block-diagonal approximation: per-layer block
/// H_{ij,i'j'} = 2 G^l_{jj'} K^l_{ii'}; cross-layer blocks identically zero.
std::vector<Matrix> kfac_hessian(const Network& net, const Dataset& data);

/// Count of eigenvalues at or below rank_tol * max(lambda_max, 1).
int hessian_nullity(const Matrix& hessian, double rank_tol = kDefaultRankTol);

struct LedgerTols {
    double rank_tol = kDefaultRankTol;
    double span_rank_tol = kDefaultRankTol;
};

struct LedgerEntry {
    int layer = 0;        // weight layer index
    int rank_G = 0;       // rank of G^l (bias included)
    int rank_K = 0;       // rank of K^l
    int activation_rank_deficit = 0;      // d^l + 1 - rank G^l
    int jacobian_rank_deficit = 0;        // d^{l+1} - rank K^l
    int activation_contribution = 0;      // deficit * d^{l+1}
    int jacobian_contribution = 0;        // deficit * (d^l + 1)
    int sync_count = 0;                   // N^{l+1} = sum_a (s_a)^2 (hidden layers)
    int sync_diagonal_count = 0;          // generic per-neuron diagonal freedom
    int nullity_bound = 0;                // params_l - rank_G * rank_K
};

/// Per-layer degeneracy sources plus a conservative combined lower bound on
/// the Hessian nullity. Sync counts are reparameterization freedoms and are
/// reported separately; they do not enter the nullity bound.
struct DegeneracyLedger {
    std::vector<LedgerEntry> entries;
    int predicted_nullity_lower_bound = 0;
    int N = 0;
    int N_free = 0;  // = predicted_nullity_lower_bound
    int N_eff = 0;   // = N - N_free
    int sync_total = 0;
};

DegeneracyLedger degeneracy_ledger(const Network& net, const Dataset& data,
                                   const LedgerTols& tols = {});

}  // namespace degen
