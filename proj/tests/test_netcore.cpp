#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "degen/sync.hpp"
#include "helpers.hpp"

using namespace degen;
namespace dt = degen::testing;

namespace {

Network one_layer(Matrix weights, Activation act) {
    Layer layer;
    layer.weights = std::move(weights);
    layer.activation = act;
    return Network(static_cast<int>(layer.weights.cols()) - 1, {layer});
}

}  // namespace

TEST_CASE("forward: identity linear layer") {
    Matrix w(2, 3);
    w << 0, 1, 0, 0, 0, 1;
    Network net = one_layer(w, Activation::Linear);
    Dataset data;
    data.inputs = Matrix(1, 2);
    data.inputs << 1, 2;
    ForwardTrace trace = forward_trace(net, data);
    CHECK(trace.outputs()(0, 0) == doctest::Approx(1.0));
    CHECK(trace.outputs()(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("forward: relu clamps negative preactivations") {
    Matrix w(2, 3);
    w << 0, 1, 0, 0, 0, -1;
    Network net = one_layer(w, Activation::ReLU);
    Dataset data;
    data.inputs = Matrix(1, 2);
    data.inputs << 1, 1;
    ForwardTrace trace = forward_trace(net, data);
    CHECK(trace.preactivations[1](0, 0) == 1.0);
    CHECK(trace.preactivations[1](0, 1) == -1.0);
    CHECK(trace.outputs()(0, 0) == 1.0);
    CHECK(trace.outputs()(0, 1) == 0.0);
}

TEST_CASE("forward: bias-only row") {
    Matrix w = Matrix::Zero(1, 3);
    w(0, 0) = 0.5;
    Network net = one_layer(w, Activation::Linear);
    Dataset data;
    data.inputs = Matrix(2, 2);
    data.inputs << 3, -4, 100, 7;
    ForwardTrace trace = forward_trace(net, data);
    CHECK(trace.preactivations[1](0, 0) == 0.5);
    CHECK(trace.preactivations[1](1, 0) == 0.5);
}

TEST_CASE("forward: dimension mismatch raises") {
    std::mt19937_64 rng(1);
    Network net = dt::random_net(rng, {3, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 4, 5);
    CHECK_THROWS(forward_trace(net, data));
}

TEST_CASE("trace: relu activation equals gate times preactivation exactly") {
    std::mt19937_64 rng(2);
    Network net = dt::random_net(rng, {4, 5, 3}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 16, 4);
    ForwardTrace trace = forward_trace(net, data);
    for (int l = 1; l <= net.depth(); ++l) {
        FiringPattern fp = firing_patterns(net, trace, l);
        for (int x = 0; x < data.size(); ++x)
            for (int i = 0; i < fp.values.cols(); ++i)
                CHECK(trace.activations[l](x, i + 1) ==
                      fp.values(x, i) * trace.preactivations[l](x, i));
    }
}

TEST_CASE("jacobian: deep linear equals product of weight matrices") {
    std::mt19937_64 rng(3);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::Linear);
    Dataset data = dt::random_data(rng, 4, 3);
    ForwardTrace trace = forward_trace(net, data);

    Matrix product = net.layer(1).weights.rightCols(4) * net.layer(0).weights.rightCols(3);
    JacobianSet jacs = output_jacobian(net, trace, 0, JacobianWrt::Activation, net.depth());
    for (const Matrix& J : jacs.per_datapoint)
        CHECK((J - product).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jacobian: target equals source gives the identity") {
    std::mt19937_64 rng(4);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 3, 3);
    ForwardTrace trace = forward_trace(net, data);
    JacobianSet jacs = output_jacobian(net, trace, 1, JacobianWrt::Activation, 1);
    for (const Matrix& J : jacs.per_datapoint)
        CHECK((J - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jacobian: matches finite differences on a relu net") {
    std::mt19937_64 rng(5);
    Network net = dt::random_net(rng, {4, 5, 3}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 8, 4);
    ForwardTrace trace = forward_trace(net, data);

    for (int layer : {0, 1}) {
        JacobianSet jacs =
            output_jacobian(net, trace, layer, JacobianWrt::Activation, net.depth());
        for (int x = 0; x < data.size(); ++x) {
            // skip kink points where the subgradient convention departs from FD
            bool kink = false;
            for (int l = layer + 1; l <= net.depth(); ++l)
                kink = kink || trace.preactivations[l].row(x).cwiseAbs().minCoeff() < 1e-5;
            if (kink) continue;
            Vector f_ext = trace.activations[layer].row(x).transpose();
            Matrix fd = dt::fd_activation_jacobian(net, layer, f_ext);
            CHECK(dt::rel_frobenius(jacs.per_datapoint[x], fd.rightCols(fd.cols() - 1)) < 1e-6);
        }
    }
}

TEST_CASE("chain rule: adjacent jacobian products compose exactly") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        Network net = dt::random_net(rng, {3, 5, 4, 2}, Activation::ReLU);
        Dataset data = dt::random_data(rng, 6, 3);
        ForwardTrace trace = forward_trace(net, data);

        JacobianSet full = output_jacobian(net, trace, 0, JacobianWrt::Activation, 3);
        JacobianSet j01 = output_jacobian(net, trace, 0, JacobianWrt::Activation, 1);
        JacobianSet j12 = output_jacobian(net, trace, 1, JacobianWrt::Activation, 2);
        JacobianSet j23 = output_jacobian(net, trace, 2, JacobianWrt::Activation, 3);
        for (int x = 0; x < data.size(); ++x) {
            Matrix composed =
                j23.per_datapoint[x] * j12.per_datapoint[x] * j01.per_datapoint[x];
            CHECK((composed - full.per_datapoint[x]).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("weight gradients: single linear layer is delta_ki x_j") {
    Matrix w(2, 3);
    w << 0.3, 1.5, -0.7, 0.1, 0.2, 0.9;
    Network net = one_layer(w, Activation::Linear);
    Dataset data;
    data.inputs = Matrix(1, 2);
    data.inputs << 2, -3;
    ForwardTrace trace = forward_trace(net, data);
    WeightGradients grads = weight_gradients(net, trace, 0);
    const Matrix& g = grads.per_datapoint[0];
    Vector x_ext(3);
    x_ext << 1, 2, -3;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(g(k, i * 3 + j) == doctest::Approx(k == i ? x_ext[j] : 0.0));
}

TEST_CASE("weight gradients: finite differences on a relu net") {
    std::mt19937_64 rng(7);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 5, 3);
    ForwardTrace trace = forward_trace(net, data);
    const double h = 1e-6;

    for (int layer : {0, 1}) {
        WeightGradients grads = weight_gradients(net, trace, layer);
        for (int x = 0; x < data.size(); ++x) {
            bool kink = false;
            for (int l = 1; l <= net.depth(); ++l)
                kink = kink || trace.preactivations[l].row(x).cwiseAbs().minCoeff() < 1e-5;
            if (kink) continue;
            Dataset one;
            one.inputs = data.inputs.row(x);
            const Matrix& w = net.layer(layer).weights;
            for (int i = 0; i < w.rows(); ++i)
                for (int j = 0; j < w.cols(); ++j) {
                    Network up = net, dn = net;
                    up.layer(layer).weights(i, j) += h;
                    dn.layer(layer).weights(i, j) -= h;
                    Vector diff = (up.forward(one.inputs) - dn.forward(one.inputs)).row(0) /
                                  (2.0 * h);
                    for (int k = 0; k < diff.size(); ++k) {
                        double got = grads.per_datapoint[x](k, i * w.cols() + j);
                        CHECK(std::abs(got - diff[k]) < 1e-5 * (1.0 + std::abs(diff[k])));
                    }
                }
        }
    }
}

TEST_CASE("weight gradients: per-output slices have rank at most one") {
    std::mt19937_64 rng(8);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 3, 3);
    ForwardTrace trace = forward_trace(net, data);
    WeightGradients grads = weight_gradients(net, trace, 0);
    for (int x = 0; x < data.size(); ++x)
        for (int k = 0; k < 2; ++k) {
            Matrix slice(grads.rows, grads.cols);
            for (int i = 0; i < grads.rows; ++i)
                for (int j = 0; j < grads.cols; ++j)
                    slice(i, j) = grads.per_datapoint[x](k, i * grads.cols + j);
            Eigen::JacobiSVD<Matrix> svd(slice);
            if (svd.singularValues()[0] > 0.0)
                CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
        }
}

TEST_CASE("zoo: deterministic per seed") {
    ZooSpec spec;
    spec.kind = ZooKind::RandomReLU;
    spec.widths = {4, 6, 3};
    spec.seed = 99;
    ZooResult a = generate_network(spec);
    ZooResult b = generate_network(spec);
    for (int l = 0; l < a.net.depth(); ++l)
        CHECK((a.net.layer(l).weights - b.net.layer(l).weights).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.data.inputs - b.data.inputs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zoo: planted sync blocks recovered by the detector") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedSync;
    spec.widths = {6, 6, 3};
    spec.block_sizes = {3, 2, 1};
    spec.seed = 11;
    ZooResult zoo = generate_network(spec);
    ForwardTrace trace = forward_trace(zoo.net, zoo.data);
    FiringPattern fp = firing_patterns(zoo.net, trace, 1);
    SyncPartition part = detect_blocks(fp, trace, SyncMode::Exact);
    REQUIRE(zoo.certificate.blocks.has_value());
    CHECK(part.blocks == *zoo.certificate.blocks);
}

TEST_CASE("zoo: two-module net without mediators has zero cross weights") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedTwoModule;
    spec.widths = {4, 6, 4, 2};
    spec.seed = 21;
    ZooResult zoo = generate_network(spec);
    REQUIRE(zoo.certificate.module_ids.has_value());
    const auto& ids = *zoo.certificate.module_ids;
    for (int l = 0; l < zoo.net.depth(); ++l) {
        const Matrix& w = zoo.net.layer(l).weights;
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 1; j < w.cols(); ++j)
                if (ids[l][j - 1] != ids[l + 1][i]) CHECK(w(i, j) == 0.0);
    }
}

TEST_CASE("zoo: invalid specs raise") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedSync;
    spec.widths = {4, 6, 3};
    spec.block_sizes = {3, 2};  // sums to 5, not 6
    CHECK_THROWS(generate_network(spec));
    spec.block_sizes.clear();
    CHECK_THROWS(generate_network(spec));
    ZooSpec lowrank;
    lowrank.kind = ZooKind::PlantedLowrankData;
    lowrank.widths = {4, 3};
    lowrank.data_rank = 4;
    CHECK_THROWS(generate_network(lowrank));
}
