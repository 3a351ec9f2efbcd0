#include "degen/sparsify.hpp"

#include <algorithm>

namespace degen {

int InteractionGraph::node_count() const {
    int total = 0;
    for (int s : layer_sizes) total += s;
    return total;
}

int InteractionGraph::node_id(int layer, int index) const {
    int base = 0;
    for (int l = 0; l < layer; ++l) base += layer_sizes[l];
    return base + index;
}

std::pair<int, int> InteractionGraph::node_of(int id) const {
    int layer = 0;
    while (id >= layer_sizes[layer]) {
        id -= layer_sizes[layer];
        ++layer;
    }
    return {layer, id};
}

int InteractionGraph::total_structural_zeros() const {
    int total = 0;
    for (const auto& z : zeros_by_layer) total += z.activation_rank + z.sync;
    return total;
}

DropResult drop_dependent_inputs(const Network& net, const ForwardTrace& trace, int layer,
                                 const SparsifyTols& tols) {
    const Matrix G = activation_gram(trace, layer).matrix;
    const int D = static_cast<int>(G.rows());
    const int rank = spectrum(G, tols.rank_tol).numerical_rank;
    const Matrix& W = net.layer(layer).weights;

    // greedy pivoted Cholesky: repeatedly take the coordinate with the
    // largest residual diagonal as the next spanning element
    Matrix R = G;
    std::vector<int> kept;
    std::vector<bool> is_kept(D, false);
    for (int step = 0; step < rank; ++step) {
        int pivot = -1;
        double best = -1.0;
        for (int j = 0; j < D; ++j)
            if (!is_kept[j] && R(j, j) > best) {
                best = R(j, j);
                pivot = j;
            }
        if (pivot < 0 || best <= 0.0) break;
        kept.push_back(pivot);
        is_kept[pivot] = true;
        R -= (R.col(pivot) * R.row(pivot)) / R(pivot, pivot);
    }
    std::sort(kept.begin(), kept.end());

    DropResult result;
    result.weights = W;
    result.kept = kept;

    const int r = static_cast<int>(kept.size());
    Matrix Gss(r, r);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) Gss(a, b) = G(kept[a], kept[b]);
    Eigen::LDLT<Matrix> ldlt(Gss);

    for (int j = 0; j < D; ++j) {
        if (is_kept[j]) continue;
        Vector gsj(r);
        for (int a = 0; a < r; ++a) gsj[a] = G(kept[a], j);
        Vector c = ldlt.solve(gsj);
        double residual2 = std::max(0.0, G(j, j) - c.dot(gsj));
        // fold only near-exact dependencies; otherwise keep the column
        if (std::sqrt(residual2) > tols.dep_tol * std::sqrt(std::max(G(j, j), 0.0))) continue;
        for (int a = 0; a < r; ++a) result.weights.col(kept[a]) += c[a] * W.col(j);
        // count only entries that actually flip to zero, so a second pass
        // over already-sparsified weights reports nothing new
        for (int i = 0; i < W.rows(); ++i)
            if (W(i, j) != 0.0) ++result.zero_count;
        result.weights.col(j).setZero();
        result.dropped.push_back(j);
    }
    return result;
}

SyncTransformResult sync_coordinate_transform(const Network& net, const SyncPartition& partition,
                                              int layer, const Dataset& data,
                                              const SparsifyTols& tols) {
    const int h = partition.layer;
    if (h != layer + 1) throw std::invalid_argument("partition must sit at layer + 1");
    if (h < 1 || h >= net.depth()) throw std::out_of_range("transform layer must be hidden");
    const Layer& wl = net.layer(layer);
    const int d = wl.out_dim();
    const int in = wl.in_dim();
    if (partition.width() != d) throw std::invalid_argument("block misalignment");

    ForwardTrace trace = forward_trace(net, data);
    const Matrix& pre = trace.preactivations[h];

    SyncTransformResult result;
    result.transform = Matrix::Identity(d, d);
    result.inverse = Matrix::Identity(d, d);

    for (size_t a = 0; a < partition.blocks.size(); ++a) {
        const auto& blk = partition.blocks[a];
        const int b = static_cast<int>(blk.size());
        bool ok = true;
        for (int k : blk) ok = ok && (k < in);  // neuron k pairs with weight column k+1
        Matrix B(b, b);
        if (ok) {
            for (int r = 0; r < b; ++r)
                for (int c = 0; c < b; ++c) B(r, c) = wl.weights(blk[r], blk[c] + 1);
            Eigen::JacobiSVD<Matrix> svd(B);
            double smax = svd.singularValues().maxCoeff();
            ok = smax > 0.0 && svd.singularValues().minCoeff() > tols.pinv_tol * smax;
        }
        Matrix Binv;
        if (ok) {
            Binv = Eigen::FullPivLU<Matrix>(B).inverse();
            // commutation of B^{-1} with the nonlinearity is checked on the
            // data, not assumed
            Vector u(b), lhs(b), rhs(b);
            for (int x = 0; x < pre.rows() && ok; ++x) {
                for (int r = 0; r < b; ++r) u[r] = pre(x, blk[r]);
                Vector cu = Binv * u;
                for (int r = 0; r < b; ++r) {
                    lhs[r] = firing_value(wl.activation, wl.leak, cu[r]) * cu[r];
                    rhs[r] = firing_value(wl.activation, wl.leak, u[r]) * u[r];
                }
                rhs = Binv * rhs;
                ok = (lhs - rhs).cwiseAbs().maxCoeff() <=
                     tols.commute_tol * (1.0 + u.cwiseAbs().maxCoeff());
            }
        }
        if (!ok) {
            result.rolled_back.push_back(static_cast<int>(a));
            continue;
        }
        result.accepted.push_back(static_cast<int>(a));
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c) {
                result.transform(blk[r], blk[c]) = Binv(r, c);
                result.inverse(blk[r], blk[c]) = B(r, c);
            }
    }

    result.weights = result.transform * wl.weights;
    // plant the exact identity on accepted diagonal blocks; new zeros are
    // counted against the pre-transform weights so reruns add nothing
    for (int ai : result.accepted) {
        const auto& blk = partition.blocks[ai];
        for (size_t r = 0; r < blk.size(); ++r)
            for (size_t c = 0; c < blk.size(); ++c) {
                if (r != c && wl.weights(blk[r], blk[c] + 1) != 0.0) ++result.zero_count;
                result.weights(blk[r], blk[c] + 1) = (r == c) ? 1.0 : 0.0;
            }
    }
    return result;
}

std::pair<SparsifiedNetwork, InteractionGraph> sparsify_network(const Network& net,
                                                                const Dataset& data,
                                                                const SparsifyTols& tols) {
    const Matrix original_outputs = net.forward(data.inputs);
    const int L = net.depth();

    SparsifiedNetwork result;
    result.net = net;
    result.transforms.assign(L + 1, Matrix());
    result.zeros_activation.assign(L, 0);
    result.zeros_sync.assign(L, 0);
    result.rolled_back_blocks.assign(L, {});

    for (int l = 0; l < L; ++l) {
        ForwardTrace trace = forward_trace(result.net, data);
        DropResult drop = drop_dependent_inputs(result.net, trace, l, tols);
        result.net.layer(l).weights = drop.weights;
        result.zeros_activation[l] = drop.zero_count;

        if (l + 1 < L) {
            ForwardTrace trace2 = forward_trace(result.net, data);
            FiringPattern fp = firing_patterns(result.net, trace2, l + 1);
            SyncPartition part = detect_blocks(fp, trace2, SyncMode::Exact, 0.0, tols.rank_tol);
            SyncTransformResult st =
                sync_coordinate_transform(result.net, part, l, data, tols);
            result.net.layer(l).weights = st.weights;
            const int dn = result.net.layer(l).out_dim();
            Matrix& down = result.net.layer(l + 1).weights;
            down.rightCols(dn) = down.rightCols(dn) * st.inverse;
            result.transforms[l + 1] = st.transform;
            result.zeros_sync[l] = st.zero_count;
            result.rolled_back_blocks[l] = st.rolled_back;
        }
    }

    Matrix outputs = result.net.forward(data.inputs);
    double worst = 0.0;
    for (int x = 0; x < outputs.rows(); ++x) {
        double dev = (outputs.row(x) - original_outputs.row(x)).norm() /
                     (original_outputs.row(x).norm() + 1e-12);
        worst = std::max(worst, dev);
    }
    result.max_output_deviation = worst;

    InteractionGraph graph = interaction_graph(result.net);
    for (int l = 0; l < L; ++l) {
        graph.zeros_by_layer[l].activation_rank = result.zeros_activation[l];
        graph.zeros_by_layer[l].sync = result.zeros_sync[l];
    }
    return {std::move(result), std::move(graph)};
}

InteractionGraph interaction_graph(const Network& net) {
    InteractionGraph graph;
    for (int w : net.widths()) graph.layer_sizes.push_back(w);
    graph.zeros_by_layer.assign(net.depth(), {});
    for (int l = 0; l < net.depth(); ++l) {
        const Matrix& W = net.layer(l).weights;
        for (int i = 0; i < W.rows(); ++i)
            for (int j = 1; j < W.cols(); ++j)
                if (W(i, j) != 0.0) graph.edges.push_back({l, j - 1, i, W(i, j)});
    }
    return graph;
}

}  // namespace degen
