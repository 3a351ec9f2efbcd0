#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "helpers.hpp"

#include "degen/hessian.hpp"

using namespace degen;
namespace dt = degen::testing;

namespace {

Network linear_1param(double theta) {
    Layer layer;
    layer.weights = Matrix::Zero(1, 2);
    layer.weights(0, 1) = theta;
    return Network(1, {layer});
}

}  // namespace

TEST_CASE("behavioral loss: zero at the reference, positive elsewhere") {
    std::mt19937_64 rng(21);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 10, 3);
    CHECK(behavioral_loss(net, net, data) == 0.0);

    Network other = net;
    other.layer(0).weights(0, 0) += 0.1;
    CHECK(behavioral_loss(other, net, data) > 0.0);
}

TEST_CASE("behavioral loss: hand value for a scalar model") {
    // f_theta(x) = theta x, reference theta* = 1, data {1, 2}:
    // L(theta) = (1/2)((theta-1)^2 + 4(theta-1)^2) = 2.5 (theta-1)^2
    Network ref = linear_1param(1.0);
    Network net = linear_1param(3.0);
    Dataset data;
    data.inputs = Matrix(2, 1);
    data.inputs << 1, 2;
    CHECK(behavioral_loss(net, ref, data) == doctest::Approx(2.5 * 4.0));
}

TEST_CASE("exact hessian: scalar model closed form and finite differences") {
    // L = 2.5 (theta-1)^2 over the weight coordinate, plus a flat bias-free
    // direction: H for the full [bias, theta] parameterization is
    // 2 * (1/n) sum x_ext x_ext^T with x_ext = (1, x)
    Network net = linear_1param(1.0);
    Dataset data;
    data.inputs = Matrix(2, 1);
    data.inputs << 1, 2;

    HessianResult h = exact_hessian(net, data);
    Matrix expected(2, 2);
    expected << 2.0, 3.0, 3.0, 5.0;  // 2 * [[1, 1.5], [1.5, 2.5]]
    CHECK(dt::rel_frobenius(h.matrix, expected) < 1e-12);
    CHECK(h.matrix(1, 1) == doctest::Approx(5.0));

    Matrix fd = dt::fd_loss_hessian(net, data);
    CHECK(dt::rel_frobenius(h.matrix, fd) < 1e-4);
}

TEST_CASE("exact hessian: matches finite differences on small nets") {
    std::mt19937_64 rng(22);
    for (auto widths : {std::vector<int>{2, 3, 2}, std::vector<int>{3, 2, 2, 1}}) {
        Network net = dt::random_net(rng, widths, Activation::LeakyReLU, 0.3);
        Dataset data = dt::random_data(rng, 12, widths[0]);
        HessianResult h = exact_hessian(net, data);
        Matrix fd = dt::fd_loss_hessian(net, data);
        CHECK(dt::rel_frobenius(h.matrix, fd) < 1e-4);
    }
}

TEST_CASE("exact hessian: PSD with symmetric matrix") {
    std::mt19937_64 rng(23);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 10, 3);
    HessianResult h = exact_hessian(net, data);
    CHECK((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Spectrum sp = spectrum(h.matrix);
    CHECK(sp.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("hessian nullity: planted low-rank data frees whole columns") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedLowrankData;
    spec.widths = {5, 3};
    spec.data_rank = 2;
    spec.seed = 9;
    spec.n_datapoints = 30;
    spec.hidden_activation = Activation::Linear;
    ZooResult zoo = generate_network(spec);

    // single linear layer: H = 2 I_{d_out} (x) G^0, so the nullity is exactly
    // the G-deficit times d_out; deficit = (5 + 1) - (2 + 1) = 3
    HessianResult h = exact_hessian(zoo.net, zoo.data);
    CHECK(hessian_nullity(h.matrix) == 3 * 3);
}

TEST_CASE("kfac: single datapoint reproduces the exact per-layer blocks") {
    std::mt19937_64 rng(24);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::LeakyReLU);
    Dataset data = dt::random_data(rng, 1, 3);

    std::vector<Matrix> blocks = kfac_hessian(net, data);
    REQUIRE(blocks.size() == 2);
    for (int l = 0; l < 2; ++l) {
        HessianResult h = exact_hessian(net, data, {l});
        CHECK(dt::rel_frobenius(blocks[l], h.matrix) < 1e-10);
    }
}

TEST_CASE("kfac: blocks are the Kronecker pairing of G and K") {
    std::mt19937_64 rng(25);
    Network net = dt::random_net(rng, {3, 4, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 8, 3);
    ForwardTrace trace = forward_trace(net, data);

    std::vector<Matrix> blocks = kfac_hessian(net, data);
    for (int l = 0; l < 2; ++l) {
        Matrix G = activation_gram(trace, l).matrix;
        Matrix K = jacobian_gram(net, trace, l, GramKind::JacobianK).matrix;
        const int rows = net.layer(l).out_dim();
        const int cols = net.layer(l).in_dim() + 1;
        const Matrix& B = blocks[l];
        REQUIRE(B.rows() == rows * cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                for (int i2 = 0; i2 < rows; ++i2)
                    for (int j2 = 0; j2 < cols; ++j2)
                        CHECK(B(i * cols + j, i2 * cols + j2) ==
                              doctest::Approx(2.0 * G(j, j2) * K(i, i2)).epsilon(1e-10));
    }
}

TEST_CASE("ledger: fully synchronized hidden layer counts s^2") {
    // large biases keep every hidden neuron firing on all datapoints, so the
    // three neurons form one block whose preactivations span 3 dimensions
    std::mt19937_64 rng(26);
    Layer l0, l1;
    l0.weights = dt::random_matrix(rng, 3, 3, 0.1);
    l0.weights.col(0).setConstant(10.0);
    l0.activation = Activation::ReLU;
    l1.weights = dt::random_matrix(rng, 1, 4);
    Network net(2, {l0, l1});
    Dataset data = dt::random_data(rng, 20, 2);

    DegeneracyLedger ledger = degeneracy_ledger(net, data);
    // one block of size 3 at the only hidden layer
    CHECK(ledger.sync_total == 9);
}

TEST_CASE("ledger: distinct firing patterns give the diagonal count") {
    std::mt19937_64 rng(28);
    Network net = dt::random_net(rng, {4, 5, 2}, Activation::ReLU);
    Dataset data = dt::random_data(rng, 40, 4);
    DegeneracyLedger ledger = degeneracy_ledger(net, data);
    // generic random nets have all-singleton blocks: N = sum 1^2 = d^1
    CHECK(ledger.sync_total == 5);
    CHECK(ledger.entries[0].sync_diagonal_count == 5);
}

TEST_CASE("ledger: activation deficit contributes deficit times fan-out") {
    ZooSpec spec;
    spec.kind = ZooKind::PlantedLowrankData;
    spec.widths = {4, 4, 2};
    spec.data_rank = 3;
    spec.seed = 11;
    spec.n_datapoints = 40;
    ZooResult zoo = generate_network(spec);

    DegeneracyLedger ledger = degeneracy_ledger(zoo.net, zoo.data);
    const LedgerEntry& e0 = ledger.entries[0];
    CHECK(e0.activation_rank_deficit == 1);  // (4+1) - (3+1)
    CHECK(e0.activation_contribution == 4);  // deficit * d^1
}

TEST_CASE("ledger: bound never exceeds the measured nullity") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 3; ++trial) {
        ZooSpec spec;
        spec.kind = ZooKind::PlantedLowrankData;
        spec.widths = {4, 3, 2};
        spec.data_rank = 2;
        spec.seed = 100 + trial;
        spec.n_datapoints = 30;
        ZooResult zoo = generate_network(spec);

        DegeneracyLedger ledger = degeneracy_ledger(zoo.net, zoo.data);
        HessianResult h = exact_hessian(zoo.net, zoo.data);
        CHECK(ledger.predicted_nullity_lower_bound <= hessian_nullity(h.matrix));
        CHECK(ledger.N == zoo.net.parameter_count());
        CHECK(ledger.N_eff == ledger.N - ledger.N_free);
        CHECK(ledger.N_free == ledger.predicted_nullity_lower_bound);
    }
}
