#pragma once

#include "degen/sparsify.hpp"
#include "degen/volume.hpp"

namespace degen {

/// Assignment of every activation node (layer, neuron) to a module id
/// (1-based). Bias coordinates belong to the module of the weight's target
/// neuron and never cross.
struct ModuleMask {
    std::vector<std::vector<int>> module_of;  // [layer][neuron]

    void validate(const Network& net) const;
    int module_count() const;
    /// true when weight (layer, row i, col j) connects different modules
    /// (j is the bias-folded column index; j = 0 never crosses)
    bool is_cross(int layer, int i, int j) const;
};

struct LossDecomposition {
    double l1 = 0.0;
    double l2 = 0.0;
    double joint = 0.0;
    double residual = 0.0;  // joint - l1 - l2
};

/// Evaluate the behavioral loss under a probe perturbation confined to the
/// module-1 parameters, to module-2, and jointly (cross weights untouched).
LossDecomposition decompose_behavioral_loss(const Network& net, const ModuleMask& mask,
                                            const Dataset& data, const Vector& probe);

struct MediatorNode {
    int layer = 0;
    int neuron = 0;
    double cross_weight = 0.0;  // total |w| connecting this node across modules
};

struct MediatorSet {
    std::vector<MediatorNode> nodes;
    double eps = 1e-4;
};

/// Landscape over module-1 parameters: module-1 output MSE plus per-mediator
/// value-preservation penalties, weighted 1 (unweighted) or w_i^2 = eps^{2k_i}.
LossLandscape constrained_loss(const Network& net, const ModuleMask& mask, const Dataset& data,
                               const MediatorSet& mediators, bool weighted);

/// gamma_i = max(0, 1 - 2 ln w / ln eps) * gamma_tilde, clamped to
/// [0, gamma_tilde]; exactly 0 at w <= sqrt(eps) and gamma_tilde at w = 1.
double gamma_estimate(double w, double eps, double gamma_tilde);

struct PartitionScore {
    double total = 0.0;
    // (edge index in graph, contribution) for every cross edge
    std::vector<std::pair<int, double>> per_edge;
    double eps = 0.0;
};

/// Mask over graph nodes (flat ids); module ids 0-based here.
using GraphMask = std::vector<int>;

/// Sum over cross-module edges of max(0, ln(|w| / sqrt(eps))).
PartitionScore partition_score(const InteractionGraph& graph, const GraphMask& mask, double eps);

/// Flatten a per-layer module mask to flat graph node ids (0-based modules).
GraphMask to_graph_mask(const InteractionGraph& graph, const ModuleMask& mask);

struct PartitionResult {
    GraphMask mask;
    PartitionScore score;
};

/// Recursive spectral bipartition on the clamped-log-weight Laplacian with
/// greedy Kernighan-Lin-style refinement. Modules smaller than 5% of nodes
/// are only allowed when the clamped graph is disconnected.
PartitionResult find_partition(const InteractionGraph& graph, int k, double eps,
                               std::uint64_t seed);

}  // namespace degen
