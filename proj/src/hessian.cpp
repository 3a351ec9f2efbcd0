#include "degen/hessian.hpp"

#include <algorithm>

namespace degen {

double behavioral_loss(const Network& net, const Matrix& ref_outputs, const Dataset& data) {
    Matrix out = net.forward(data.inputs);
    if (out.cols() != ref_outputs.cols())
        throw std::invalid_argument("output dimensions differ between net and reference");
    return (out - ref_outputs).squaredNorm() / static_cast<double>(data.size());
}

double behavioral_loss(const Network& net, const Network& ref, const Dataset& data) {
    if (net.input_dim() != ref.input_dim())
        throw std::invalid_argument("input dimensions differ between net and reference");
    return behavioral_loss(net, ref.forward(data.inputs), data);
}

HessianResult exact_hessian(const Network& net, const Dataset& data, std::vector<int> layers) {
    std::sort(layers.begin(), layers.end());
    ForwardTrace trace = forward_trace(net, data);

    HessianResult result;
    int total = 0;
    for (int l : layers) {
        if (l < 0 || l >= net.depth()) throw std::out_of_range("layer out of range");
        result.offsets.push_back(total);
        total += static_cast<int>(net.layer(l).weights.size());
    }
    result.layers = layers;
    if (total > kMaxExactHessianParams)
        throw std::invalid_argument("network too large for exact Hessian assembly; use KFAC");

    std::vector<WeightGradients> grads;
    for (int l : layers) grads.push_back(weight_gradients(net, trace, l));

    const int n = data.size();
    const int d_out = net.output_dim();
    Matrix H = Matrix::Zero(total, total);
    Vector g(total);
    for (int x = 0; x < n; ++x) {
        for (int k = 0; k < d_out; ++k) {
            for (size_t li = 0; li < layers.size(); ++li) {
                const Matrix& gl = grads[li].per_datapoint[x];
                g.segment(result.offsets[li], gl.cols()) = gl.row(k).transpose();
            }
            H.selfadjointView<Eigen::Lower>().rankUpdate(g, kHessianConventionFactor / n);
        }
    }
    result.matrix = Matrix(H.selfadjointView<Eigen::Lower>());
    return result;
}

HessianResult exact_hessian(const Network& net, const Dataset& data) {
    std::vector<int> layers(net.depth());
    for (int l = 0; l < net.depth(); ++l) layers[l] = l;
    return exact_hessian(net, data, std::move(layers));
}

std::vector<Matrix> kfac_hessian(const Network& net, const Dataset& data) {
    ForwardTrace trace = forward_trace(net, data);
    std::vector<Matrix> blocks;
    for (int l = 0; l < net.depth(); ++l) {
        Matrix G = activation_gram(trace, l).matrix;
        Matrix K = jacobian_gram(net, trace, l, GramKind::JacobianK).matrix;
        const int rows = static_cast<int>(K.rows());
        const int cols = static_cast<int>(G.rows());
        Matrix block(rows * cols, rows * cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                for (int i2 = 0; i2 < rows; ++i2)
                    for (int j2 = 0; j2 < cols; ++j2)
                        block(i * cols + j, i2 * cols + j2) =
                            kHessianConventionFactor * G(j, j2) * K(i, i2);
        blocks.push_back(std::move(block));
    }
    return blocks;
}

int hessian_nullity(const Matrix& hessian, double rank_tol) {
    Spectrum spec = spectrum(hessian, rank_tol);
    return static_cast<int>(hessian.rows()) - spec.numerical_rank;
}

DegeneracyLedger degeneracy_ledger(const Network& net, const Dataset& data,
                                   const LedgerTols& tols) {
    ForwardTrace trace = forward_trace(net, data);
    DegeneracyLedger ledger;
    ledger.N = net.parameter_count();
    const auto widths = net.widths();
    const int L = net.depth();

    for (int l = 0; l < L; ++l) {
        LedgerEntry e;
        e.layer = l;
        const int din = widths[l] + 1;   // bias included
        const int dout = widths[l + 1];

        Spectrum sg = spectrum(activation_gram(trace, l), tols.rank_tol);
        e.rank_G = sg.numerical_rank;
        Spectrum sk = spectrum(jacobian_gram(net, trace, l, GramKind::JacobianK), tols.rank_tol);
        e.rank_K = sk.numerical_rank;

        e.activation_rank_deficit = din - e.rank_G;
        e.jacobian_rank_deficit = dout - e.rank_K;
        e.activation_contribution = e.activation_rank_deficit * dout;
        e.jacobian_contribution = e.jacobian_rank_deficit * din;
        // Directions confined to this layer's weights that are orthogonal to
        // the span of all weight gradients; spans of distinct layers live in
        // disjoint coordinates, so these bounds add.
        e.nullity_bound = din * dout - e.rank_G * e.rank_K;

        if (l + 1 < L) {  // hidden layer: synchronized-block freedoms
            FiringPattern fp = firing_patterns(net, trace, l + 1);
            SyncPartition part =
                detect_blocks(fp, trace, SyncMode::Exact, 0.0, tols.span_rank_tol);
            e.sync_count = sync_degeneracy(part);
            e.sync_diagonal_count = dout;
            ledger.sync_total += e.sync_count;
        }
        ledger.predicted_nullity_lower_bound += e.nullity_bound;
        ledger.entries.push_back(e);
    }
    ledger.N_free = ledger.predicted_nullity_lower_bound;
    ledger.N_eff = ledger.N - ledger.N_free;
    return ledger;
}

}  // namespace degen
