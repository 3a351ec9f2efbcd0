#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"

#include "degen/sparsify.hpp"

using namespace degen;
namespace dt = degen::testing;

TEST_CASE("drop: full-rank activations leave the weights untouched") {
    std::mt19937_64 rng(41);
    Network net = dt::random_net(rng, {4, 5, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 30, 4);
    ForwardTrace trace = forward_trace(net, data);

    DropResult drop = drop_dependent_inputs(net, trace, 0);
    CHECK(drop.zero_count == 0);
    CHECK(drop.dropped.empty());
    CHECK((drop.weights - net.layer(0).weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("drop: a duplicated input coordinate folds into its twin") {
    std::mt19937_64 rng(42);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 25, 3);
    data.inputs.col(2) = 2.0 * data.inputs.col(1);  // exact dependence
    ForwardTrace trace = forward_trace(net, data);

    Matrix before = net.forward(data.inputs);
    DropResult drop = drop_dependent_inputs(net, trace, 0);
    CHECK(drop.dropped.size() == 1);
    CHECK(drop.weights.col(drop.dropped[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(drop.zero_count == 4);  // one column of 4 previously nonzero entries

    Network folded = net;
    folded.layer(0).weights = drop.weights;
    CHECK(dt::rel_frobenius(folded.forward(data.inputs), before) < 1e-10);
}

TEST_CASE("drop: planted low-rank data zeroes deficit x fan-out entries") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedLowrankData;
    spec.widths = {5, 4, 2};
    spec.data_rank = 2;
    spec.seed = 13;
    spec.n_datapoints = 40;
    ZooResult zoo = generate_network(spec);

    ForwardTrace trace = forward_trace(zoo.net, zoo.data);
    DropResult drop = drop_dependent_inputs(zoo.net, trace, 0);
    CHECK(static_cast<int>(drop.dropped.size()) == 3);  // 5 inputs, rank 2
    CHECK(drop.zero_count == 3 * 4);
}

TEST_CASE("sync transform: planted blocks get exact identity blocks") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedSync;
    spec.widths = {6, 6, 3};
    spec.block_sizes = {3, 2, 1};
    spec.seed = 7;
    spec.n_datapoints = 50;
    ZooResult zoo = generate_network(spec);

    auto [sparse, graph] = sparsify_network(zoo.net, zoo.data);
    CHECK(sparse.max_output_deviation < 1e-8);
    CHECK(sparse.rolled_back_blocks[0].empty());

    // every accepted block carries an identity diagonal block
    const Matrix& W = sparse.net.layer(0).weights;
    for (const auto& blk : *zoo.certificate.blocks)
        for (size_t r = 0; r < blk.size(); ++r)
            for (size_t c = 0; c < blk.size(); ++c)
                CHECK(W(blk[r], blk[c] + 1) == (r == c ? 1.0 : 0.0));

    // sum s_a^2 - d new zeros from the off-diagonal block entries
    CHECK(sparse.zeros_sync[0] >= 9 + 4 + 1 - 6);
}

TEST_CASE("sparsify: outputs on the dataset are preserved end to end") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ZooSpec spec;
        spec.kind = ZooKind::PlantedSync;
        spec.widths = {6, 6, 3};
        spec.block_sizes = {2, 2, 1, 1};
        spec.seed = seed;
        spec.n_datapoints = 50;
        ZooResult zoo = generate_network(spec);

        Matrix before = zoo.net.forward(zoo.data.inputs);
        auto [sparse, graph] = sparsify_network(zoo.net, zoo.data);
        CHECK(dt::rel_frobenius(sparse.net.forward(zoo.data.inputs), before) < 1e-8);
        CHECK(sparse.max_output_deviation < 1e-8);
    }
}

TEST_CASE("sparsify: a second pass is the identity") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedSync;
    spec.widths = {6, 6, 3};
    spec.block_sizes = {3, 2, 1};
    spec.seed = 7;
    spec.n_datapoints = 50;
    ZooResult zoo = generate_network(spec);

    auto [first, g1] = sparsify_network(zoo.net, zoo.data);
    auto [second, g2] = sparsify_network(first.net, zoo.data);
    for (int l = 0; l < zoo.net.depth(); ++l) {
        CHECK(dt::rel_frobenius(second.net.layer(l).weights, first.net.layer(l).weights) <
              1e-12);
        CHECK(second.zeros_activation[l] == 0);
        CHECK(second.zeros_sync[l] == 0);
    }
}

TEST_CASE("interaction graph: edges are exactly the nonzero weights") {
    std::mt19937_64 rng(43);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    net.layer(0).weights(1, 2) = 0.0;
    net.layer(1).weights(0, 3) = 0.0;

    InteractionGraph graph = interaction_graph(net);
    CHECK(graph.layer_sizes == std::vector<int>{3, 4, 2});
    CHECK(static_cast<int>(graph.edges.size()) == 3 * 4 + 4 * 2 - 2);
    for (const auto& e : graph.edges) {
        CHECK(net.layer(e.layer).weights(e.to, e.from + 1) == e.weight);
        CHECK(e.weight != 0.0);
    }

    // flat node ids round-trip
    for (int id = 0; id < graph.node_count(); ++id) {
        auto [l, i] = graph.node_of(id);
        CHECK(graph.node_id(l, i) == id);
    }
}
