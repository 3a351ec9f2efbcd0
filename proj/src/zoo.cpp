#include "degen/zoo.hpp"

#include <numeric>
#include <random>

namespace degen {

std::string zoo_kind_name(ZooKind k) {
    switch (k) {
        case ZooKind::DeepLinear: return "deep_linear";
        case ZooKind::RandomReLU: return "random_relu";
        case ZooKind::PlantedLowrankData: return "planted_lowrank_data";
        case ZooKind::PlantedSync: return "planted_sync";
        case ZooKind::PlantedTwoModule: return "planted_two_module";
    }
    return "unknown";
}

ZooKind zoo_kind_from_name(const std::string& name) {
    if (name == "deep_linear") return ZooKind::DeepLinear;
    if (name == "random_relu") return ZooKind::RandomReLU;
    if (name == "planted_lowrank_data") return ZooKind::PlantedLowrankData;
    if (name == "planted_sync") return ZooKind::PlantedSync;
    if (name == "planted_two_module") return ZooKind::PlantedTwoModule;
    throw std::invalid_argument("unknown zoo kind: " + name);
}

void ZooSpec::validate() const {
    if (widths.size() < 2) throw std::invalid_argument("zoo spec needs at least two widths");
    for (int w : widths)
        if (w <= 0) throw std::invalid_argument("widths must be positive");
    if (n_datapoints < 1) throw std::invalid_argument("n_datapoints must be >= 1");
    if (kind == ZooKind::PlantedLowrankData) {
        if (data_rank < 1 || data_rank >= widths[0])
            throw std::invalid_argument("planted_lowrank_data requires 0 < r < d^0");
    }
    if (kind == ZooKind::PlantedSync) {
        if (block_sizes.empty())
            throw std::invalid_argument("planted_sync requires block sizes");
        int sum = std::accumulate(block_sizes.begin(), block_sizes.end(), 0);
        if (sum != widths[1])
            throw std::invalid_argument("block sizes must sum to the first hidden width");
        for (int b : block_sizes)
            if (b <= 0) throw std::invalid_argument("block sizes must be positive");
        if (widths.size() < 3)
            throw std::invalid_argument("planted_sync needs a hidden layer");
    }
    if (kind == ZooKind::PlantedTwoModule) {
        for (int w : widths)
            if (w < 2) throw std::invalid_argument("planted_two_module needs widths >= 2");
    }
}

namespace {

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
    return m;
}

Layer random_layer(std::mt19937_64& rng, int in_dim, int out_dim, Activation act, double leak) {
    Layer layer;
    layer.weights = random_matrix(rng, out_dim, in_dim + 1, 1.0 / std::sqrt(in_dim + 1.0));
    layer.activation = act;
    layer.leak = leak;
    return layer;
}

std::vector<Layer> random_stack(std::mt19937_64& rng, const std::vector<int>& widths,
                                Activation hidden) {
    std::vector<Layer> layers;
    const int L = static_cast<int>(widths.size()) - 1;
    for (int l = 0; l < L; ++l) {
        Activation act = (l + 1 == L) ? Activation::Linear : hidden;
        layers.push_back(random_layer(rng, widths[l], widths[l + 1], act, 0.01));
    }
    return layers;
}

}  // namespace

ZooResult generate_network(const ZooSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    ZooResult result;
    const auto& w = spec.widths;
    const int L = static_cast<int>(w.size()) - 1;

    switch (spec.kind) {
        case ZooKind::DeepLinear: {
            result.net = Network(w[0], random_stack(rng, w, Activation::Linear));
            result.data.inputs = random_matrix(rng, spec.n_datapoints, w[0], 1.0);
            break;
        }
        case ZooKind::RandomReLU: {
            result.net = Network(w[0], random_stack(rng, w, spec.hidden_activation));
            result.data.inputs = random_matrix(rng, spec.n_datapoints, w[0], 1.0);
            break;
        }
        case ZooKind::PlantedLowrankData: {
            result.net = Network(w[0], random_stack(rng, w, spec.hidden_activation));
            const int r = spec.data_rank;
            Matrix base = random_matrix(rng, spec.n_datapoints, r, 1.0);
            Matrix coeffs = random_matrix(rng, r, w[0] - r, 1.0);
            Matrix inputs(spec.n_datapoints, w[0]);
            inputs.leftCols(r) = base;
            inputs.rightCols(w[0] - r) = base * coeffs;
            result.data.inputs = inputs;
            result.certificate.dependence_coefficients = coeffs;
            break;
        }
        case ZooKind::PlantedSync: {
            auto layers = random_stack(rng, w, spec.hidden_activation);
            // Zero bias on the first layer so sign patterns are set by the
            // data alone, which the rejection sampler below controls.
            layers[0].weights.col(0).setZero();

            std::vector<std::vector<int>> blocks;
            int next = 0;
            for (int b : spec.block_sizes) {
                std::vector<int> blk(b);
                std::iota(blk.begin(), blk.end(), next);
                next += b;
                blocks.push_back(blk);
            }

            // Give each diagonal block a positive inverse, so the block
            // coordinate transform commutes with the ReLU on synchronized
            // preactivations.
            std::uniform_real_distribution<double> uni(0.5, 1.5);
            for (const auto& blk : blocks) {
                const int b = static_cast<int>(blk.size());
                if (blk.back() + 1 > w[0]) continue;  // no matching weight columns
                Matrix P(b, b);
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) P(i, j) = uni(rng) + (i == j ? b : 0.0);
                Matrix B = Eigen::FullPivLU<Matrix>(P).inverse();
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) layers[0].weights(blk[i], blk[j] + 1) = B(i, j);
            }
            result.net = Network(w[0], std::move(layers));

            const Matrix& W0 = result.net.layer(0).weights;
            std::normal_distribution<double> normal(0.0, 1.0);
            Matrix inputs(spec.n_datapoints, w[0]);
            int accepted = 0;
            long attempts = 0;
            const long max_attempts = 2000000L;
            while (accepted < spec.n_datapoints) {
                if (++attempts > max_attempts)
                    throw std::runtime_error("planted_sync sampling did not converge");
                Vector x(w[0]);
                for (int j = 0; j < w[0]; ++j) x[j] = normal(rng);
                Vector xb(w[0] + 1);
                xb[0] = 1.0;
                xb.tail(w[0]) = x;
                Vector p = W0 * xb;
                bool ok = true;
                for (const auto& blk : blocks) {
                    double s = p[blk[0]] >= 0 ? 1.0 : -1.0;
                    for (int i : blk) {
                        if (std::abs(p[i]) < 1e-6 || (p[i] >= 0 ? 1.0 : -1.0) != s) {
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) break;
                }
                if (ok) inputs.row(accepted++) = x.transpose();
            }
            // Distinct planted blocks must be distinguishable on the sample;
            // retry with fresh rows if two blocks never disagree.
            Matrix pre = with_bias_column(inputs) * W0.transpose();
            for (size_t a = 0; a + 1 < blocks.size(); ++a) {
                for (size_t b = a + 1; b < blocks.size(); ++b) {
                    bool distinct = false;
                    for (int x = 0; x < pre.rows() && !distinct; ++x)
                        distinct = (pre(x, blocks[a][0]) >= 0) != (pre(x, blocks[b][0]) >= 0);
                    if (!distinct)
                        throw std::runtime_error(
                            "planted_sync: blocks indistinguishable on sample; "
                            "increase n_datapoints or change seed");
                }
            }
            result.data.inputs = inputs;
            result.certificate.blocks = blocks;
            break;
        }
        case ZooKind::PlantedTwoModule: {
            std::vector<int> split1(w.size());
            for (size_t l = 0; l < w.size(); ++l) split1[l] = (w[l] + 1) / 2;
            std::vector<Layer> layers;
            for (int l = 0; l < L; ++l) {
                Activation act = (l + 1 == L) ? Activation::Linear : spec.hidden_activation;
                Layer layer = random_layer(rng, w[l], w[l + 1], act, 0.01);
                // zero every cross-module weight (bias column stays)
                for (int i = 0; i < w[l + 1]; ++i) {
                    int mi = i < split1[l + 1] ? 1 : 2;
                    for (int j = 0; j < w[l]; ++j) {
                        int mj = j < split1[l] ? 1 : 2;
                        if (mi != mj) layer.weights(i, j + 1) = 0.0;
                    }
                }
                layers.push_back(std::move(layer));
            }
            result.net = Network(w[0], std::move(layers));

            // mediators: module-1 node in layer l feeding a module-2 node in
            // layer l+1, at deterministic distinct positions
            int med_layer = L > 1 ? L / 2 : 0;
            int placed = 0;
            for (double wm : spec.mediator_weights) {
                int rows2 = w[med_layer + 1] - split1[med_layer + 1];
                int cols1 = split1[med_layer];
                if (rows2 < 1 || cols1 < 1)
                    throw std::invalid_argument("no room for mediator weights");
                if (placed >= rows2 * cols1)
                    throw std::invalid_argument("too many mediator weights for layer size");
                int i = split1[med_layer + 1] + placed % rows2;
                int j = placed / rows2;
                result.net.layer(med_layer).weights(i, j + 1) = wm;
                result.certificate.mediators.emplace_back(med_layer, i, j, wm);
                ++placed;
            }

            std::vector<std::vector<int>> module_ids;
            for (size_t l = 0; l < w.size(); ++l) {
                std::vector<int> ids(w[l]);
                for (int i = 0; i < w[l]; ++i) ids[i] = i < split1[l] ? 1 : 2;
                module_ids.push_back(ids);
            }
            result.certificate.module_ids = module_ids;
            result.data.inputs = random_matrix(rng, spec.n_datapoints, w[0], 1.0);
            break;
        }
    }
    return result;
}

}  // namespace degen
