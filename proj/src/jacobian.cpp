#include "degen/jacobian.hpp"

namespace degen {

Vector firing_gates(const Network& net, const ForwardTrace& trace, int l, int datapoint) {
    const Layer& layer = net.layer(l - 1);  // weight layer producing f^l
    const Matrix& p = trace.preactivations[l];
    Vector r(p.cols());
    for (int i = 0; i < p.cols(); ++i)
        r[i] = firing_value(layer.activation, layer.leak, p(datapoint, i));
    return r;
}

JacobianSet output_jacobian(const Network& net, const ForwardTrace& trace, int layer,
                            JacobianWrt wrt, int target, bool include_bias) {
    const int L = net.depth();
    if (target < 0 || target > L) throw std::out_of_range("target layer out of range");
    if (wrt == JacobianWrt::Preactivation) {
        if (layer < 0 || layer >= target) throw std::out_of_range("source layer out of range");
        if (include_bias) throw std::invalid_argument("preactivations have no bias coordinate");
    } else {
        if (layer < 0 || layer > target) throw std::out_of_range("source layer out of range");
    }

    const int n = trace.n();
    JacobianSet jacs;
    jacs.per_datapoint.reserve(n);
    jacs.target_layer = target;
    jacs.source_layer = layer;
    jacs.wrt = wrt;
    jacs.includes_bias = include_bias;

    const auto widths = net.widths();
    for (int x = 0; x < n; ++x) {
        Matrix J;
        int from;  // first activation layer whose f the running J is taken at
        if (wrt == JacobianWrt::Preactivation) {
            // d f^{layer+1} / d p^{layer+1} = diag(r^{layer+1})
            Vector r = firing_gates(net, trace, layer + 1, x);
            J = r.asDiagonal();
            from = layer + 1;
        } else {
            int cols = widths[layer] + (include_bias ? 1 : 0);
            J = Matrix::Identity(widths[layer], cols);
            if (include_bias) {
                J.setZero();
                for (int i = 0; i < widths[layer]; ++i) J(i, i + 1) = 1.0;
            }
            from = layer;
        }
        for (int m = from; m < target; ++m) {
            // d f^{m+1} / d f^m = diag(r^{m+1}) * W^m (bias column dropped)
            const Layer& wl = net.layer(m);
            Matrix step = wl.weights.rightCols(wl.in_dim());
            Vector r = firing_gates(net, trace, m + 1, x);
            J = r.asDiagonal() * (step * J);
        }
        jacs.per_datapoint.push_back(std::move(J));
    }
    return jacs;
}

WeightGradients weight_gradients(const Network& net, const ForwardTrace& trace, int layer) {
    if (layer < 0 || layer >= net.depth()) throw std::out_of_range("layer out of range");
    const int n = trace.n();
    const int d_out = net.output_dim();
    const int rows = net.layer(layer).out_dim();
    const int cols = net.layer(layer).in_dim() + 1;

    JacobianSet jacs = output_jacobian(net, trace, layer, JacobianWrt::Preactivation, net.depth());
    WeightGradients grads;
    grads.layer = layer;
    grads.rows = rows;
    grads.cols = cols;
    grads.per_datapoint.reserve(n);
    for (int x = 0; x < n; ++x) {
        const Matrix& J = jacs.per_datapoint[x];  // [d_out x rows]
        Matrix g(d_out, rows * cols);
        for (int k = 0; k < d_out; ++k)
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                    g(k, i * cols + j) = J(k, i) * trace.activations[layer](x, j);
        grads.per_datapoint.push_back(std::move(g));
    }
    return grads;
}

}  // namespace degen
