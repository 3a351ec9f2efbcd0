#pragma once

#include "degen/network.hpp"

namespace degen {

enum class JacobianWrt {
    Preactivation,  // d f^target / d p^{layer+1}
    Activation      // d f^target / d f^layer (non-bias coordinates)
};

/// Per-datapoint Jacobians of target-layer activations with respect to a
/// chosen set of coordinates. ReLU gates are taken from the trace's firing
/// masks, with subgradient 1 at exactly zero preactivation.
struct JacobianSet {
    std::vector<Matrix> per_datapoint;  // each [target_width x source_count]
    int target_layer = 0;
    int source_layer = 0;
    JacobianWrt wrt = JacobianWrt::Preactivation;
    bool includes_bias = false;

    int n() const { return static_cast<int>(per_datapoint.size()); }
    int target_width() const { return static_cast<int>(per_datapoint.front().rows()); }
    int source_count() const { return static_cast<int>(per_datapoint.front().cols()); }
};

/// Jacobian of f^target (non-bias coordinates) with respect to either
/// p^{layer+1} (Preactivation mode) or f^layer (Activation mode).
/// With include_bias, Activation mode also differentiates with respect to the
/// constant bias coordinate of f^layer (column 0).
JacobianSet output_jacobian(const Network& net, const ForwardTrace& trace, int layer,
                            JacobianWrt wrt, int target, bool include_bias = false);

/// Per-datapoint gradients of every final output f_k with respect to the
/// weights of one layer: g[x](k, i*(d^l+1)+j) = J_{k,i}(x) * f^l_j(x).
struct WeightGradients {
    std::vector<Matrix> per_datapoint;  // each [d_out x (d^{l+1} * (d^l+1))]
    int layer = 0;
    int rows = 0;  // d^{l+1}
    int cols = 0;  // d^l + 1
};

WeightGradients weight_gradients(const Network& net, const ForwardTrace& trace, int layer);

/// Diagonal firing gate of layer `l` (activations f^l, l >= 1) for one
/// datapoint row of the trace.
Vector firing_gates(const Network& net, const ForwardTrace& trace, int l, int datapoint);

}  // namespace degen
