#include "degen/network.hpp"

namespace degen {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
    }
    return "unknown";
}

Activation activation_from_name(const std::string& name) {
    if (name == "linear") return Activation::Linear;
    if (name == "relu") return Activation::ReLU;
    if (name == "leaky_relu") return Activation::LeakyReLU;
    throw std::invalid_argument("unknown activation kind: " + name);
}

Network::Network(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
    validate();
}

void Network::validate() const {
    if (input_dim_ <= 0) throw std::invalid_argument("input_dim must be positive");
    if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
    int prev = input_dim_;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.in_dim() != prev)
            throw std::invalid_argument("layer " + std::to_string(l) +
                                        " expects input width " + std::to_string(layer.in_dim()) +
                                        ", got " + std::to_string(prev));
        if (!layer.weights.allFinite())
            throw std::invalid_argument("layer " + std::to_string(l) + " has non-finite weights");
        prev = layer.out_dim();
    }
}

std::vector<int> Network::widths() const {
    std::vector<int> w{input_dim_};
    for (const auto& layer : layers_) w.push_back(layer.out_dim());
    return w;
}

int Network::parameter_count() const {
    int count = 0;
    for (const auto& layer : layers_) count += static_cast<int>(layer.weights.size());
    return count;
}

Vector Network::flatten_parameters() const {
    Vector theta(parameter_count());
    int pos = 0;
    for (const auto& layer : layers_) {
        for (int i = 0; i < layer.weights.rows(); ++i)
            for (int j = 0; j < layer.weights.cols(); ++j) theta[pos++] = layer.weights(i, j);
    }
    return theta;
}

void Network::set_parameters(const Vector& theta) {
    if (theta.size() != parameter_count())
        throw std::invalid_argument("parameter vector size mismatch");
    int pos = 0;
    for (auto& layer : layers_) {
        for (int i = 0; i < layer.weights.rows(); ++i)
            for (int j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = theta[pos++];
    }
}

void Dataset::validate() const {
    if (inputs.rows() < 1) throw std::invalid_argument("dataset must have at least one row");
    if (!inputs.allFinite()) throw std::invalid_argument("dataset has non-finite entries");
}

double firing_value(Activation act, double leak, double p) {
    switch (act) {
        case Activation::Linear: return 1.0;
        case Activation::ReLU: return p >= 0.0 ? 1.0 : 0.0;
        case Activation::LeakyReLU: return p >= 0.0 ? 1.0 : leak;
    }
    return 1.0;
}

Matrix with_bias_column(const Matrix& m) {
    Matrix out(m.rows(), m.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(m.cols()) = m;
    return out;
}

ForwardTrace forward_trace(const Network& net, const Dataset& data) {
    data.validate();
    if (data.dim() != net.input_dim())
        throw std::invalid_argument("dataset width " + std::to_string(data.dim()) +
                                    " does not match network input_dim " +
                                    std::to_string(net.input_dim()));
    ForwardTrace trace;
    trace.activations.reserve(net.depth() + 1);
    trace.preactivations.reserve(net.depth() + 1);
    trace.activations.push_back(with_bias_column(data.inputs));
    trace.preactivations.emplace_back();

    for (const Layer& layer : net.layers()) {
        // p^{l+1} = f^l W^T, row per datapoint.
        Matrix p = trace.activations.back() * layer.weights.transpose();
        Matrix f = p;
        if (layer.activation != Activation::Linear) {
            for (int r = 0; r < f.rows(); ++r)
                for (int c = 0; c < f.cols(); ++c)
                    f(r, c) = firing_value(layer.activation, layer.leak, p(r, c)) * p(r, c);
        }
        trace.preactivations.push_back(std::move(p));
        trace.activations.push_back(with_bias_column(f));
    }
    return trace;
}

Matrix Network::forward(const Matrix& inputs) const {
    Dataset d{inputs};
    return forward_trace(*this, d).outputs();
}

Matrix ForwardTrace::outputs() const {
    const Matrix& last = activations.back();
    return last.rightCols(last.cols() - 1);
}

}  // namespace degen
