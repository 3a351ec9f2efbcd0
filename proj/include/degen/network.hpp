#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace degen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Linear, ReLU, LeakyReLU };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One dense layer. The bias is folded into column 0 of the weight matrix,
/// so W has shape [out_dim x (in_dim + 1)] and acts on activation vectors
/// whose zeroth coordinate is the constant 1.
struct Layer {
    Matrix weights;
    Activation activation = Activation::Linear;
    double leak = 0.01;  // slope for LeakyReLU

    int out_dim() const { return static_cast<int>(weights.rows()); }
    int in_dim() const { return static_cast<int>(weights.cols()) - 1; }
};

/// A small fully connected network: an ordered stack of bias-folded layers.
class Network {
public:
    Network() = default;
    Network(int input_dim, std::vector<Layer> layers);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return layers_.back().out_dim(); }
    int depth() const { return static_cast<int>(layers_.size()); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    const Layer& layer(int l) const { return layers_.at(l); }
    Layer& layer(int l) { return layers_.at(l); }

    /// Widths d^0 .. d^L (activation counts per layer, bias not included).
    std::vector<int> widths() const;

    /// Total number of weight entries (bias columns included).
    int parameter_count() const;

    /// Flatten all weights, layer by layer, row-major within a layer.
    Vector flatten_parameters() const;
    void set_parameters(const Vector& theta);

    /// Plain forward pass, outputs [n x d_out].
    Matrix forward(const Matrix& inputs) const;

    void validate() const;

private:
    int input_dim_ = 0;
    std::vector<Layer> layers_;
};

/// Input matrix, one datapoint per row.
struct Dataset {
    Matrix inputs;

    int size() const { return static_cast<int>(inputs.rows()); }
    int dim() const { return static_cast<int>(inputs.cols()); }
    void validate() const;
};

/// All activations f^l [n x (d^l+1)] (column 0 all ones) and preactivations
/// p^l [n x d^l] recorded for every layer of a forward pass.
struct ForwardTrace {
    // activations[l], l = 0..L; activations[0] is the bias-extended input.
    std::vector<Matrix> activations;
    // preactivations[l], l = 1..L; preactivations[0] is an empty placeholder.
    std::vector<Matrix> preactivations;

    int num_layers() const { return static_cast<int>(activations.size()) - 1; }
    int n() const { return static_cast<int>(activations.front().rows()); }

    /// Final-layer outputs without the bias coordinate.
    Matrix outputs() const;
};

ForwardTrace forward_trace(const Network& net, const Dataset& data);

/// Gate value of a scalar preactivation under the given activation kind.
/// ReLU takes the subgradient value 1 at exactly p = 0.
double firing_value(Activation act, double leak, double p);

/// Prepend a column of ones.
Matrix with_bias_column(const Matrix& m);

}  // namespace degen
