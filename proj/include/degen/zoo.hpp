#pragma once

#include <cstdint>
#include <optional>

#include "degen/network.hpp"

namespace degen {

enum class ZooKind {
    DeepLinear,
    RandomReLU,
    PlantedLowrankData,
    PlantedSync,
    PlantedTwoModule
};

std::string zoo_kind_name(ZooKind k);
ZooKind zoo_kind_from_name(const std::string& name);

/// Recipe for a synthetic network + dataset with a certifiable planted
/// property.
struct ZooSpec {
    ZooKind kind = ZooKind::RandomReLU;
    std::vector<int> widths;  // d^0 .. d^L
    std::uint64_t seed = 0;
    int n_datapoints = 64;
    // activation used on hidden layers (final layer is always linear)
    Activation hidden_activation = Activation::ReLU;

    // planted_lowrank_data: data matrix rank r < d^0
    int data_rank = 0;
    // planted_sync: block sizes at the first hidden layer, summing to d^1
    std::vector<int> block_sizes;
    // planted_two_module: cross-module mediator edge weights (may be empty)
    std::vector<double> mediator_weights;

    void validate() const;
};

/// Ground truth shipped with every generated network.
struct ZooCertificate {
    // planted_lowrank_data: for each dependent input coordinate, the
    // coefficients expressing it in terms of the first `data_rank` inputs.
    std::optional<Matrix> dependence_coefficients;
    // planted_sync: planted partition of the first hidden layer.
    std::optional<std::vector<std::vector<int>>> blocks;
    // planted_two_module: module id (1 or 2) per (layer, neuron).
    std::optional<std::vector<std::vector<int>>> module_ids;
    // planted_two_module: positions of inserted mediator weights.
    std::vector<std::tuple<int, int, int, double>> mediators;  // (layer, row, col, w)
};

struct ZooResult {
    Network net;
    Dataset data;
    ZooCertificate certificate;
};

/// Deterministic per seed; the planted property is certifiably present.
ZooResult generate_network(const ZooSpec& spec);

}  // namespace degen
