#include "degen/sync.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace degen {

FiringPattern firing_patterns(const Network& net, const ForwardTrace& trace, int layer) {
    if (layer < 1 || layer > trace.num_layers()) throw std::out_of_range("layer out of range");
    const Layer& wl = net.layer(layer - 1);
    const Matrix& p = trace.preactivations[layer];
    FiringPattern fp;
    fp.layer = layer;
    fp.values = Matrix(p.rows(), p.cols());
    for (int x = 0; x < p.rows(); ++x)
        for (int i = 0; i < p.cols(); ++i)
            fp.values(x, i) = firing_value(wl.activation, wl.leak, p(x, i));
    return fp;
}

int SyncPartition::width() const {
    int w = 0;
    for (const auto& b : blocks) w += static_cast<int>(b.size());
    return w;
}

double default_sync_tol(const ForwardTrace& trace, int layer) {
    const Matrix& p = trace.preactivations.at(layer);
    return 1e-6 * p.array().square().mean();
}

namespace {

// Eq-20-style statistic over ordered pairs of a candidate block.
double block_statistic(const Matrix& f, const std::vector<int>& block) {
    double acc = 0.0;
    const int n = static_cast<int>(f.rows());
    for (int a : block)
        for (int b : block) {
            if (a == b) continue;
            acc += (f.col(a) - f.col(b)).squaredNorm();
        }
    return acc / n;
}

int span_dim(const Matrix& pre, const std::vector<int>& block, double rank_tol) {
    const int n = static_cast<int>(pre.rows());
    Matrix sub(n, block.size());
    for (size_t c = 0; c < block.size(); ++c) sub.col(c) = pre.col(block[c]);
    Matrix gram = (sub.transpose() * sub) / static_cast<double>(n);
    return spectrum(gram, rank_tol).numerical_rank;
}

}  // namespace

SyncPartition detect_blocks(const FiringPattern& patterns, const ForwardTrace& trace,
                            SyncMode mode, double tol, double span_rank_tol) {
    const int d = static_cast<int>(patterns.values.cols());
    const int n = static_cast<int>(patterns.values.rows());
    if (n < 1) throw std::invalid_argument("empty dataset");
    const Matrix& pre = trace.preactivations.at(patterns.layer);
    const Matrix& fact = trace.activations.at(patterns.layer);
    Matrix f = fact.rightCols(d);  // activations without bias coordinate

    SyncPartition part;
    part.layer = patterns.layer;
    part.mode = mode;
    part.tol = tol;

    if (mode == SyncMode::Exact) {
        std::vector<int> owner(d, -1);
        for (int i = 0; i < d; ++i) {
            if (owner[i] >= 0) continue;
            owner[i] = static_cast<int>(part.blocks.size());
            part.blocks.push_back({i});
            for (int j = i + 1; j < d; ++j) {
                if (owner[j] >= 0) continue;
                if ((patterns.values.col(i).array() == patterns.values.col(j).array()).all()) {
                    owner[j] = owner[i];
                    part.blocks[owner[i]].push_back(j);
                }
            }
        }
    } else {
        // complete-linkage agglomeration on the activation-difference
        // statistic: merge while the merged block statistic stays below tol
        std::vector<std::vector<int>> clusters;
        for (int i = 0; i < d; ++i) clusters.push_back({i});
        while (clusters.size() > 1) {
            double best = std::numeric_limits<double>::infinity();
            size_t bi = 0, bj = 0;
            for (size_t i = 0; i < clusters.size(); ++i)
                for (size_t j = i + 1; j < clusters.size(); ++j) {
                    std::vector<int> merged = clusters[i];
                    merged.insert(merged.end(), clusters[j].begin(), clusters[j].end());
                    double stat = block_statistic(f, merged);
                    if (stat < best) {
                        best = stat;
                        bi = i;
                        bj = j;
                    }
                }
            if (!(best < tol)) break;
            clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
            std::sort(clusters[bi].begin(), clusters[bi].end());
            clusters.erase(clusters.begin() + bj);
        }
        std::sort(clusters.begin(), clusters.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        part.blocks = std::move(clusters);
    }

    for (auto& blk : part.blocks) std::sort(blk.begin(), blk.end());
    for (const auto& blk : part.blocks) {
        part.span_dims.push_back(span_dim(pre, blk, span_rank_tol));
        part.mismatch.push_back(block_statistic(f, blk));
    }

    part.pattern_hamming = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double diff =
                (patterns.values.col(i).array() != patterns.values.col(j).array()).count() /
                static_cast<double>(n);
            part.pattern_hamming(i, j) = diff;
            part.pattern_hamming(j, i) = diff;
        }
    return part;
}

int sync_degeneracy(const SyncPartition& partition) {
    if (partition.span_dims.size() != partition.blocks.size())
        throw std::invalid_argument("span_dims not populated");
    int acc = 0;
    for (int s : partition.span_dims) acc += s * s;
    return acc;
}

int sync_degeneracy_raw(const SyncPartition& partition) {
    int acc = 0;
    for (const auto& b : partition.blocks) acc += static_cast<int>(b.size() * b.size());
    return acc;
}

SyncReparam make_reparam(const SyncPartition& partition, const std::vector<Matrix>& block_mats) {
    if (block_mats.size() != partition.blocks.size())
        throw std::invalid_argument("one block matrix per partition block required");
    const int d = partition.width();
    SyncReparam rep;
    rep.layer = partition.layer;
    rep.blocks = partition.blocks;
    rep.transform = Matrix::Zero(d, d);
    rep.inverse = Matrix::Zero(d, d);
    rep.positive_within_blocks = true;
    for (size_t a = 0; a < partition.blocks.size(); ++a) {
        const auto& blk = partition.blocks[a];
        const Matrix& B = block_mats[a];
        if (B.rows() != static_cast<int>(blk.size()) || B.cols() != static_cast<int>(blk.size()))
            throw std::invalid_argument("block matrix shape mismatch");
        Eigen::FullPivLU<Matrix> lu(B);
        if (!lu.isInvertible()) throw std::invalid_argument("singular block transform");
        Matrix Binv = lu.inverse();
        for (size_t r = 0; r < blk.size(); ++r)
            for (size_t c = 0; c < blk.size(); ++c) {
                rep.transform(blk[r], blk[c]) = B(r, c);
                rep.inverse(blk[r], blk[c]) = Binv(r, c);
                if (!(B(r, c) > 0.0)) rep.positive_within_blocks = false;
            }
    }
    Eigen::JacobiSVD<Matrix> svd(rep.transform);
    double smin = svd.singularValues().minCoeff();
    rep.condition_number =
        smin > 0 ? svd.singularValues().maxCoeff() / smin : std::numeric_limits<double>::infinity();
    return rep;
}

SyncReparam random_reparam(const SyncPartition& partition, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    std::vector<Matrix> mats;
    for (const auto& blk : partition.blocks) {
        const int b = static_cast<int>(blk.size());
        Matrix B(b, b);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j) B(i, j) = uni(rng);
        // diagonal boost keeps the block well conditioned while staying positive
        B += static_cast<double>(b) * Matrix::Identity(b, b);
        mats.push_back(B);
    }
    return make_reparam(partition, mats);
}

Network apply_reparam(const Network& net, const SyncReparam& rep) {
    const int h = rep.layer;
    if (h < 1 || h >= net.depth())
        throw std::out_of_range("reparameterization layer must be hidden");
    const int d = net.layer(h - 1).out_dim();
    if (rep.transform.rows() != d) throw std::invalid_argument("block misalignment");
    Eigen::FullPivLU<Matrix> lu(rep.transform);
    if (!lu.isInvertible()) throw std::invalid_argument("singular reparameterization");

    Network out = net;
    out.layer(h - 1).weights = rep.transform * net.layer(h - 1).weights;
    Matrix& down = out.layer(h).weights;
    down.rightCols(d) = net.layer(h).weights.rightCols(d) * rep.inverse;
    return out;
}

}  // namespace degen
