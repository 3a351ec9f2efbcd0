#pragma once

#include "degen/sync.hpp"

namespace degen {

/// Interaction graph over neuron nodes (bias coordinates are bookkeeping in
/// the weights, not graph nodes). An absent edge means the corresponding
/// weight entry is exactly zero.
struct InteractionGraph {
    std::vector<int> layer_sizes;  // neurons per layer, d^0 .. d^L

    struct Edge {
        int layer = 0;  // weight layer index: from (layer, from) to (layer+1, to)
        int from = 0;
        int to = 0;
        double weight = 0.0;
    };
    std::vector<Edge> edges;

    struct ZeroCounts {
        int activation_rank = 0;
        int sync = 0;
    };
    std::vector<ZeroCounts> zeros_by_layer;  // per weight layer

    int node_count() const;
    /// Flat node id for (layer, index).
    int node_id(int layer, int index) const;
    std::pair<int, int> node_of(int id) const;
    int total_structural_zeros() const;
};

struct SparsifyTols {
    double rank_tol = kDefaultRankTol;
    // a dependent column is folded only if its least-squares residual is
    // below dep_tol * ||f_j||
    double dep_tol = 1e-6;
    // relative SVD cutoff for block pseudo/inverses
    double pinv_tol = 1e-10;
    // per-datapoint tolerance for the nonlinearity commutation check
    double commute_tol = 1e-10;
};

struct DropResult {
    Matrix weights;  // W-tilde with dependent columns set to exact zero
    int zero_count = 0;
    std::vector<int> kept;     // spanning coordinate subset (bias included)
    std::vector<int> dropped;  // folded coordinates
};

/// Zero out weight columns reading linearly dependent activations at `layer`,
/// folding them into a greedily pivoted spanning subset (Gram-based least
/// squares). W-tilde f^l = W f^l on the dataset.
DropResult drop_dependent_inputs(const Network& net, const ForwardTrace& trace, int layer,
                                 const SparsifyTols& tols = {});

struct SyncTransformResult {
    Matrix transform;          // block-diagonal C^{(l+1)} (identity off accepted blocks)
    Matrix inverse;
    Matrix weights;            // W-hat = C * W-tilde, identity planted on accepted blocks
    int zero_count = 0;        // exact zeros introduced inside accepted blocks
    std::vector<int> accepted; // indices into partition.blocks
    std::vector<int> rolled_back;
};

/// Block coordinate change at hidden layer partition.layer: per accepted
/// block, C_[a] = inverse of the matching diagonal block of the (already
/// input-sparsified) weights. Blocks whose inverse does not commute with the
/// nonlinearity on the dataset (or that are singular) are rolled back.
SyncTransformResult sync_coordinate_transform(const Network& net, const SyncPartition& partition,
                                              int layer, const Dataset& data,
                                              const SparsifyTols& tols = {});

struct SparsifiedNetwork {
    Network net;
    std::vector<Matrix> transforms;  // C^{(l)} per activation layer (identity if untouched)
    std::vector<int> zeros_activation;  // per weight layer
    std::vector<int> zeros_sync;
    std::vector<std::vector<int>> rolled_back_blocks;  // per weight layer
    double max_output_deviation = 0.0;  // relative, over the dataset
};

/// The full input-to-output pass: alternate dependence zeroing and
/// synchronized-block transforms, layer by layer. Outputs on the dataset are
/// preserved; per-block failures never abort the pass.
std::pair<SparsifiedNetwork, InteractionGraph> sparsify_network(const Network& net,
                                                                const Dataset& data,
                                                                const SparsifyTols& tols = {});

InteractionGraph interaction_graph(const Network& net);

}  // namespace degen
