#include "degen/spectral.hpp"

namespace degen {

std::string gram_kind_name(GramKind k) {
    switch (k) {
        case GramKind::Activation: return "G_activation";
        case GramKind::JacobianK: return "K_jacobian";
        case GramKind::JacobianM: return "M_jacobian";
    }
    return "unknown";
}

GramMatrix activation_gram(const ForwardTrace& trace, int layer) {
    if (layer < 0 || layer > trace.num_layers()) throw std::out_of_range("layer out of range");
    const Matrix& f = trace.activations[layer];
    if (f.rows() < 1) throw std::invalid_argument("empty trace");
    GramMatrix g;
    g.matrix = (f.transpose() * f) / static_cast<double>(f.rows());
    g.kind = GramKind::Activation;
    g.layer = layer;
    g.n = static_cast<int>(f.rows());
    return g;
}

GramMatrix jacobian_gram(const JacobianSet& jacs, GramKind mode) {
    if (mode == GramKind::Activation) throw std::invalid_argument("use activation_gram for G");
    if (jacs.per_datapoint.empty()) throw std::invalid_argument("empty JacobianSet");
    const bool want_pre = (mode == GramKind::JacobianK);
    if (want_pre != (jacs.wrt == JacobianWrt::Preactivation))
        throw std::invalid_argument("JacobianSet coordinates do not match requested mode");
    const int m = jacs.source_count();
    Matrix acc = Matrix::Zero(m, m);
    for (const Matrix& J : jacs.per_datapoint) acc += J.transpose() * J;
    GramMatrix g;
    g.matrix = acc / static_cast<double>(jacs.n());
    g.kind = mode;
    g.layer = jacs.source_layer;
    g.n = jacs.n();
    return g;
}

GramMatrix jacobian_gram(const Network& net, const ForwardTrace& trace, int layer, GramKind mode,
                         bool include_bias) {
    JacobianSet jacs =
        (mode == GramKind::JacobianK)
            ? output_jacobian(net, trace, layer, JacobianWrt::Preactivation, net.depth())
            : output_jacobian(net, trace, layer, JacobianWrt::Activation, net.depth(),
                              include_bias);
    return jacobian_gram(jacs, mode);
}

int numerical_rank(const Vector& descending_eigenvalues, double rank_tol) {
    if (descending_eigenvalues.size() == 0) return 0;
    double cutoff = rank_tol * std::max(descending_eigenvalues[0], 1.0);
    int rank = 0;
    for (int i = 0; i < descending_eigenvalues.size(); ++i)
        if (descending_eigenvalues[i] > cutoff) ++rank;
    return rank;
}

Spectrum spectrum(const Matrix& symmetric, double rank_tol) {
    if (!symmetric.allFinite()) throw std::invalid_argument("non-finite entries in Gram matrix");
    Matrix sym = 0.5 * (symmetric + symmetric.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    const int m = static_cast<int>(sym.rows());
    Spectrum spec;
    spec.rank_tol = rank_tol;
    spec.eigenvalues = Vector(m);
    spec.eigenvectors = Matrix(m, m);
    // Eigen returns ascending order; flip to descending.
    for (int i = 0; i < m; ++i) {
        spec.eigenvalues[i] = solver.eigenvalues()[m - 1 - i];
        spec.eigenvectors.row(i) = solver.eigenvectors().col(m - 1 - i).transpose();
    }
    double max_ev = m > 0 ? std::max(spec.eigenvalues[0], 0.0) : 0.0;
    for (int i = 0; i < m; ++i) {
        if (spec.eigenvalues[i] < 0.0) {
            if (spec.eigenvalues[i] < -1e-10 * std::max(max_ev, 1.0))
                throw std::runtime_error("PSD violation: eigenvalue " +
                                         std::to_string(spec.eigenvalues[i]));
            spec.eigenvalues[i] = 0.0;
        }
    }
    spec.numerical_rank = numerical_rank(spec.eigenvalues, rank_tol);
    return spec;
}

Spectrum spectrum(const GramMatrix& gram, double rank_tol) {
    return spectrum(gram.matrix, rank_tol);
}

}  // namespace degen
