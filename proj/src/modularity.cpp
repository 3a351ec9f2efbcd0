#include "degen/modularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace degen {

void ModuleMask::validate(const Network& net) const {
    auto widths = net.widths();
    if (module_of.size() != widths.size())
        throw std::invalid_argument("module mask layer count does not match network");
    for (size_t l = 0; l < widths.size(); ++l) {
        if (static_cast<int>(module_of[l].size()) != widths[l])
            throw std::invalid_argument("module mask width mismatch at a layer");
        for (int id : module_of[l])
            if (id < 1) throw std::invalid_argument("module ids start at 1");
    }
}

int ModuleMask::module_count() const {
    int m = 0;
    for (const auto& layer : module_of)
        for (int id : layer) m = std::max(m, id);
    return m;
}

bool ModuleMask::is_cross(int layer, int i, int j) const {
    if (j == 0) return false;  // bias belongs to the target neuron's module
    return module_of[layer][j - 1] != module_of[layer + 1][i];
}

namespace {

// 0 = cross, otherwise the owning module id
int weight_module(const ModuleMask& mask, int layer, int i, int j) {
    int mi = mask.module_of[layer + 1][i];
    if (j == 0) return mi;
    return mask.module_of[layer][j - 1] == mi ? mi : 0;
}

// apply probe entries belonging to the given modules (cross weights never move)
Network perturbed(const Network& net, const ModuleMask& mask, const Vector& probe, bool mod1,
                  bool mod2) {
    Network out = net;
    int pos = 0;
    for (int l = 0; l < net.depth(); ++l) {
        Matrix& w = out.layer(l).weights;
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j, ++pos) {
                int m = weight_module(mask, l, i, j);
                if ((m == 1 && mod1) || (m == 2 && mod2)) w(i, j) += probe[pos];
            }
    }
    return out;
}

}  // namespace

LossDecomposition decompose_behavioral_loss(const Network& net, const ModuleMask& mask,
                                            const Dataset& data, const Vector& probe) {
    mask.validate(net);
    if (mask.module_count() > 2)
        throw std::invalid_argument("decomposition is defined for two-module masks");
    if (probe.size() != net.parameter_count())
        throw std::invalid_argument("probe length must match the flattened parameter count");

    LossDecomposition d;
    d.l1 = behavioral_loss(perturbed(net, mask, probe, true, false), net, data);
    d.l2 = behavioral_loss(perturbed(net, mask, probe, false, true), net, data);
    d.joint = behavioral_loss(perturbed(net, mask, probe, true, true), net, data);
    d.residual = d.joint - d.l1 - d.l2;
    return d;
}

LossLandscape constrained_loss(const Network& net, const ModuleMask& mask, const Dataset& data,
                               const MediatorSet& mediators, bool weighted) {
    mask.validate(net);
    if (!(mediators.eps > 0.0 && mediators.eps < 1.0))
        throw std::invalid_argument("mediator cutoff must lie in (0, 1)");
    for (const auto& m : mediators.nodes) {
        if (m.layer < 1 || m.layer >= static_cast<int>(mask.module_of.size()))
            throw std::out_of_range("mediator layer out of range");
        if (m.neuron < 0 || m.neuron >= static_cast<int>(mask.module_of[m.layer].size()))
            throw std::out_of_range("mediator neuron out of range");
        if (mask.module_of[m.layer][m.neuron] != 1)
            throw std::invalid_argument("mediator nodes must lie in module 1");
        if (m.cross_weight < 0.0)
            throw std::invalid_argument("mediator cross weights are magnitudes");
    }

    // flat positions of the module-1 parameters
    std::vector<std::pair<int, std::pair<int, int>>> slots;  // (layer, (i, j))
    for (int l = 0; l < net.depth(); ++l) {
        const Matrix& w = net.layer(l).weights;
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j)
                if (weight_module(mask, l, i, j) == 1) slots.push_back({l, {i, j}});
    }

    const int dim = static_cast<int>(slots.size());
    Vector center(dim);
    for (int s = 0; s < dim; ++s)
        center[s] = net.layer(slots[s].first).weights(slots[s].second.first,
                                                      slots[s].second.second);

    // reference: module-1 output coordinates and mediator values at theta_1*
    ForwardTrace ref = forward_trace(net, data);
    const int L = net.depth();
    std::vector<int> out1;
    for (int k = 0; k < static_cast<int>(mask.module_of[L].size()); ++k)
        if (mask.module_of[L][k] == 1) out1.push_back(k);

    const Matrix ref_out = ref.outputs();
    std::vector<Vector> ref_med;
    std::vector<double> penalty_weight;
    for (const auto& m : mediators.nodes) {
        ref_med.push_back(ref.activations[m.layer].col(m.neuron + 1));
        penalty_weight.push_back(weighted ? m.cross_weight * m.cross_weight : 1.0);
    }
    auto nodes = mediators.nodes;

    LossLandscape ls;
    ls.kind = weighted ? "constrained_weighted" : "constrained";
    ls.dimension = dim;
    ls.center = center;
    ls.evaluate = [net, data, slots, out1, ref_out, nodes, ref_med,
                   penalty_weight](const Vector& theta) {
        Network cand = net;
        for (size_t s = 0; s < slots.size(); ++s)
            cand.layer(slots[s].first).weights(slots[s].second.first, slots[s].second.second) =
                theta[static_cast<int>(s)];
        ForwardTrace trace = forward_trace(cand, data);
        const Matrix out = trace.outputs();
        const double n = static_cast<double>(data.size());

        double loss = 0.0;
        for (int k : out1) loss += (out.col(k) - ref_out.col(k)).squaredNorm();
        for (size_t i = 0; i < nodes.size(); ++i) {
            Vector v = trace.activations[nodes[i].layer].col(nodes[i].neuron + 1);
            loss += penalty_weight[i] * (v - ref_med[i]).squaredNorm();
        }
        return loss / n;
    };
    return ls;
}

double gamma_estimate(double w, double eps, double gamma_tilde) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
    if (w < 0.0) throw std::invalid_argument("w is a magnitude");
    if (w <= 0.0) return 0.0;
    double g = (1.0 - 2.0 * std::log(w) / std::log(eps)) * gamma_tilde;
    return std::clamp(g, 0.0, gamma_tilde);
}

PartitionScore partition_score(const InteractionGraph& graph, const GraphMask& mask, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
    if (static_cast<int>(mask.size()) != graph.node_count())
        throw std::invalid_argument("mask size must match node count");
    PartitionScore score;
    score.eps = eps;
    const double half_log_eps = 0.5 * std::log(eps);
    for (size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& edge = graph.edges[e];
        int u = graph.node_id(edge.layer, edge.from);
        int v = graph.node_id(edge.layer + 1, edge.to);
        if (mask[u] == mask[v]) continue;
        double c = std::max(0.0, std::log(std::abs(edge.weight)) - half_log_eps);
        score.per_edge.emplace_back(static_cast<int>(e), c);
        score.total += c;
    }
    return score;
}

GraphMask to_graph_mask(const InteractionGraph& graph, const ModuleMask& mask) {
    if (mask.module_of.size() != graph.layer_sizes.size())
        throw std::invalid_argument("mask layer count does not match graph");
    GraphMask flat;
    for (size_t l = 0; l < mask.module_of.size(); ++l) {
        if (static_cast<int>(mask.module_of[l].size()) != graph.layer_sizes[l])
            throw std::invalid_argument("mask width mismatch at a layer");
        for (int id : mask.module_of[l]) flat.push_back(id - 1);
    }
    return flat;
}

namespace {

// clamped pairwise interaction strengths, multi-edges summed
Matrix clamped_weights(const InteractionGraph& graph, double eps) {
    const int n = graph.node_count();
    Matrix C = Matrix::Zero(n, n);
    const double half_log_eps = 0.5 * std::log(eps);
    for (const auto& edge : graph.edges) {
        int u = graph.node_id(edge.layer, edge.from);
        int v = graph.node_id(edge.layer + 1, edge.to);
        double c = std::max(0.0, std::log(std::abs(edge.weight)) - half_log_eps);
        C(u, v) += c;
        C(v, u) += c;
    }
    return C;
}

double cut_cost(const Matrix& C, const std::vector<int>& nodes, const std::vector<int>& side) {
    double total = 0.0;
    for (size_t a = 0; a < nodes.size(); ++a)
        for (size_t b = a + 1; b < nodes.size(); ++b)
            if (side[a] != side[b]) total += C(nodes[a], nodes[b]);
    return total;
}

// greedy single-node moves; every accepted move strictly lowers the cut
void refine(const Matrix& C, const std::vector<int>& nodes, std::vector<int>& side,
            int min_size) {
    const int m = static_cast<int>(nodes.size());
    int count[2] = {0, 0};
    for (int s : side) ++count[s];
    bool improved = true;
    while (improved) {
        improved = false;
        int best_node = -1;
        double best_gain = 1e-12;
        for (int a = 0; a < m; ++a) {
            if (count[side[a]] - 1 < min_size) continue;
            double gain = 0.0;  // cut reduction from flipping node a
            for (int b = 0; b < m; ++b) {
                if (b == a) continue;
                double c = C(nodes[a], nodes[b]);
                gain += (side[b] != side[a]) ? c : -c;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best_node = a;
            }
        }
        if (best_node >= 0) {
            --count[side[best_node]];
            side[best_node] ^= 1;
            ++count[side[best_node]];
            improved = true;
        }
    }
}

// bipartition a node subset: Fiedler sweep plus seeded random restarts,
// each refined greedily
std::pair<std::vector<int>, std::vector<int>> bipartition(const Matrix& C,
                                                          const std::vector<int>& nodes,
                                                          int min_size, std::mt19937_64& rng) {
    const int m = static_cast<int>(nodes.size());
    if (m < 2 * min_size) min_size = m / 2;
    if (min_size < 1) min_size = 1;

    Matrix L = Matrix::Zero(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (a != b) {
                double c = C(nodes[a], nodes[b]);
                L(a, b) = -c;
                L(a, a) += c;
            }
    Eigen::SelfAdjointEigenSolver<Matrix> es(L);
    Vector fiedler = es.eigenvectors().col(std::min(1, m - 1));

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fiedler[a] < fiedler[b]; });

    std::vector<int> best_side;
    double best_cost = std::numeric_limits<double>::infinity();
    auto consider = [&](std::vector<int> side) {
        refine(C, nodes, side, min_size);
        double cost = cut_cost(C, nodes, side);
        if (cost < best_cost) {
            best_cost = cost;
            best_side = std::move(side);
        }
    };

    // sweep every balanced threshold along the Fiedler ordering
    for (int t = min_size; t <= m - min_size; ++t) {
        std::vector<int> side(m, 1);
        for (int a = 0; a < t; ++a) side[order[a]] = 0;
        consider(std::move(side));
    }
    // seeded random balanced restarts guard against bad spectral embeddings
    for (int r = 0; r < 8; ++r) {
        std::vector<int> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::uniform_int_distribution<int> cut(min_size, m - min_size);
        int t = cut(rng);
        std::vector<int> side(m, 1);
        for (int a = 0; a < t; ++a) side[perm[a]] = 0;
        consider(std::move(side));
    }

    std::vector<int> left, right;
    for (int a = 0; a < m; ++a) (best_side[a] == 0 ? left : right).push_back(nodes[a]);
    return {std::move(left), std::move(right)};
}

std::vector<std::vector<int>> connected_components(const Matrix& C) {
    const int n = static_cast<int>(C.rows());
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> comps;
    for (int start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        std::vector<int> stack{start}, members;
        comp[start] = static_cast<int>(comps.size());
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            members.push_back(u);
            for (int v = 0; v < n; ++v)
                if (C(u, v) > 0.0 && comp[v] < 0) {
                    comp[v] = comp[u];
                    stack.push_back(v);
                }
        }
        comps.push_back(std::move(members));
    }
    return comps;
}

}  // namespace

PartitionResult find_partition(const InteractionGraph& graph, int k, double eps,
                               std::uint64_t seed) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
    const int n = graph.node_count();
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (k > n) throw std::invalid_argument("k exceeds node count");

    const Matrix C = clamped_weights(graph, eps);
    std::mt19937_64 rng(seed);

    std::vector<std::vector<int>> groups;
    auto comps = connected_components(C);
    if (static_cast<int>(comps.size()) >= k) {
        // whole components are free to regroup: any k-grouping scores 0;
        // pack largest-first into the currently smallest group for balance
        std::sort(comps.begin(), comps.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
        groups.assign(k, {});
        for (const auto& c : comps) {
            auto smallest = std::min_element(groups.begin(), groups.end(),
                                             [](const auto& a, const auto& b) {
                                                 return a.size() < b.size();
                                             });
            smallest->insert(smallest->end(), c.begin(), c.end());
        }
    } else {
        const int min_size = std::max(1, (n + 19) / 20);  // 5% balance floor
        groups = std::move(comps);
        while (static_cast<int>(groups.size()) < k) {
            // split the largest group
            auto largest = std::max_element(groups.begin(), groups.end(),
                                            [](const auto& a, const auto& b) {
                                                return a.size() < b.size();
                                            });
            std::vector<int> target = std::move(*largest);
            groups.erase(largest);
            auto [left, right] = bipartition(C, target, min_size, rng);
            groups.push_back(std::move(left));
            groups.push_back(std::move(right));
        }
    }

    PartitionResult result;
    result.mask.assign(n, 0);
    for (size_t g = 0; g < groups.size(); ++g)
        for (int v : groups[g]) result.mask[v] = static_cast<int>(g);
    result.score = partition_score(graph, result.mask, eps);
    return result;
}

}  // namespace degen
