#pragma once

#include "degen/network.hpp"
#include "degen/spectral.hpp"

namespace degen {

/// Per-datapoint gate values r^l of a layer's neurons, r = f/p (with r = 1
/// at p = 0). For ReLU entries are in {0,1}, for LeakyReLU in {alpha,1},
/// for linear layers all 1.
struct FiringPattern {
    Matrix values;  // [n x d^l]
    int layer = 0;
};

FiringPattern firing_patterns(const Network& net, const ForwardTrace& trace, int layer);

enum class SyncMode { Exact, Approx };

/// Partition of a layer's neurons into synchronized blocks.
struct SyncPartition {
    int layer = 0;
    std::vector<std::vector<int>> blocks;  // sorted index sets, partitioning 0..d-1
    std::vector<int> span_dims;            // numerical rank of each block's preactivations
    std::vector<double> mismatch;          // per-block activation-difference statistic
    Matrix pattern_hamming;                // pairwise fraction of datapoints with differing gates
    SyncMode mode = SyncMode::Exact;
    double tol = 0.0;

    int width() const;
};

/// Exact mode groups neurons with bitwise-equal gate columns; approx mode
/// runs complete-linkage agglomeration on the activation-difference statistic
/// and merges while the merged block statistic stays below tol.
SyncPartition detect_blocks(const FiringPattern& patterns, const ForwardTrace& trace,
                            SyncMode mode, double tol = 0.0,
                            double span_rank_tol = kDefaultRankTol);

/// Scale-relative default tolerance for approximate detection.
double default_sync_tol(const ForwardTrace& trace, int layer);

/// N^{l+1} = sum_a (s_a)^2 over span dimensions.
int sync_degeneracy(const SyncPartition& partition);
/// Raw count sum_a |S_a|^2 (the full-rank case).
int sync_degeneracy_raw(const SyncPartition& partition);

/// Block-diagonal reparameterization at a hidden layer: W^{l} -> C W^{l}
/// (bias column included), W^{l+1} -> W^{l+1} C^{-1} on non-bias columns.
struct SyncReparam {
    int layer = 0;  // hidden activation layer index (1-based, f^layer)
    Matrix transform;
    Matrix inverse;
    std::vector<std::vector<int>> blocks;
    bool positive_within_blocks = false;
    double condition_number = 0.0;
};

/// Build a reparameterization from per-block matrices aligned with a
/// partition. Off-block entries of C are zero.
SyncReparam make_reparam(const SyncPartition& partition, const std::vector<Matrix>& block_mats);

/// Random admissible (positive within-block) reparameterization.
SyncReparam random_reparam(const SyncPartition& partition, std::uint64_t seed);

Network apply_reparam(const Network& net, const SyncReparam& rep);

}  // namespace degen
