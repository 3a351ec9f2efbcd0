#pragma once

#include <random>

#include "degen/hessian.hpp"
#include "degen/jacobian.hpp"
#include "degen/zoo.hpp"

namespace degen::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
    return m;
}

inline Network random_net(std::mt19937_64& rng, const std::vector<int>& widths, Activation hidden,
                          double leak = 0.01) {
    std::vector<Layer> layers;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.weights = random_matrix(rng, widths[l + 1], widths[l] + 1,
                                      1.0 / std::sqrt(widths[l] + 1.0));
        layer.activation = (l + 2 == widths.size()) ? Activation::Linear : hidden;
        layer.leak = leak;
        layers.push_back(std::move(layer));
    }
    return Network(widths[0], std::move(layers));
}

inline Dataset random_data(std::mt19937_64& rng, int n, int dim) {
    Dataset data;
    data.inputs = random_matrix(rng, n, dim);
    return data;
}

/// forward pass from a bias-extended activation vector at `layer` to the
/// final outputs
inline Vector forward_from(const Network& net, int layer, Vector f_ext) {
    for (int l = layer; l < net.depth(); ++l) {
        const Layer& lay = net.layer(l);
        Vector p = lay.weights * f_ext;
        Vector f(p.size() + 1);
        f[0] = 1.0;
        for (int i = 0; i < p.size(); ++i)
            f[i + 1] = firing_value(lay.activation, lay.leak, p[i]) * p[i];
        f_ext = std::move(f);
    }
    return f_ext.tail(f_ext.size() - 1);
}

/// central finite differences of the final outputs w.r.t. the bias-extended
/// activation coordinates of `layer`
inline Matrix fd_activation_jacobian(const Network& net, int layer, const Vector& f_ext,
                                     double h = 1e-6) {
    const int dout = net.output_dim();
    Matrix J(dout, f_ext.size());
    for (int j = 0; j < f_ext.size(); ++j) {
        Vector up = f_ext, dn = f_ext;
        up[j] += h;
        dn[j] -= h;
        J.col(j) = (forward_from(net, layer, up) - forward_from(net, layer, dn)) / (2.0 * h);
    }
    return J;
}

/// central finite differences of the behavioral loss against `net` itself,
/// over the full flattened parameter vector
inline Matrix fd_loss_hessian(const Network& net, const Dataset& data, double h = 1e-4) {
    const Vector theta0 = net.flatten_parameters();
    const int p = static_cast<int>(theta0.size());
    auto loss_at = [&](const Vector& theta) {
        Network candidate = net;
        candidate.set_parameters(theta);
        return behavioral_loss(candidate, net, data);
    };
    Matrix H(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            Vector t = theta0;
            double v;
            if (i == j) {
                t[i] = theta0[i] + h;
                double fp = loss_at(t);
                t[i] = theta0[i] - h;
                double fm = loss_at(t);
                v = (fp + fm - 2.0 * loss_at(theta0)) / (h * h);
            } else {
                t[i] = theta0[i] + h;
                t[j] = theta0[j] + h;
                double fpp = loss_at(t);
                t[j] = theta0[j] - h;
                double fpm = loss_at(t);
                t[i] = theta0[i] - h;
                double fmm = loss_at(t);
                t[j] = theta0[j] + h;
                double fmp = loss_at(t);
                v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace degen::testing
