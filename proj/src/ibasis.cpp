#include "degen/ibasis.hpp"

#include <cmath>
#include <limits>

namespace degen {

std::string ibasis_mode_name(IBasisMode m) {
    return m == IBasisMode::Global ? "global" : "local";
}

namespace {

void fix_row_signs(Matrix& C) {
    for (int i = 0; i < C.rows(); ++i) {
        int at = 0;
        C.row(i).cwiseAbs().maxCoeff(&at);
        if (C(i, at) < 0.0) C.row(i) = -C.row(i);
    }
}

LayerBasis pca_basis(const Matrix& G, int layer, IBasisMode mode, double rank_tol) {
    Spectrum sp = spectrum(G, rank_tol);
    LayerBasis basis;
    basis.layer = layer;
    basis.mode = mode;
    basis.rank_G = sp.numerical_rank;
    basis.retained = sp.numerical_rank;
    basis.U = sp.eigenvectors.topRows(basis.rank_G);
    basis.d_G = sp.eigenvalues.head(basis.rank_G);
    basis.C = basis.U;
    basis.pca_fallback = true;
    fix_row_signs(basis.C);
    return basis;
}

// whiten G, diagonalize M in whitened coordinates, scale
LayerBasis basis_from_grams(const Matrix& G, const Matrix& M, int layer, IBasisMode mode,
                            double rank_tol) {
    Spectrum spG = spectrum(G, rank_tol);
    LayerBasis basis;
    basis.layer = layer;
    basis.mode = mode;
    basis.rank_G = spG.numerical_rank;
    basis.U = spG.eigenvectors.topRows(basis.rank_G);
    basis.d_G = spG.eigenvalues.head(basis.rank_G);

    const Vector root = basis.d_G.cwiseSqrt();
    const Matrix T1 = root.cwiseInverse().asDiagonal() * basis.U;  // whitening
    Matrix Mw = root.asDiagonal() * (basis.U * M * basis.U.transpose()) * root.asDiagonal();
    Mw = 0.5 * (Mw + Mw.transpose());

    Spectrum spM = spectrum(Mw, rank_tol);
    basis.retained = spM.numerical_rank;
    basis.V = spM.eigenvectors.topRows(basis.retained);
    basis.d_M = spM.eigenvalues.head(basis.retained);

    Vector scale = basis.d_M.cwiseSqrt();
    if (mode == IBasisMode::Global) scale = scale.cwiseInverse();
    basis.C = scale.asDiagonal() * basis.V * T1;
    fix_row_signs(basis.C);
    return basis;
}

// Exact per-datapoint transition on bias-extended coordinates:
// f^{l+1} = T f^l with T = [e_0^T; diag(r) W], r the firing gates. This is
// the layer Jacobian except for the bias row, which carries the constant.
Matrix transition_matrix(const Layer& layer, const Matrix& pre, int datapoint) {
    const int dout = layer.out_dim();
    Matrix T = Matrix::Zero(dout + 1, layer.in_dim() + 1);
    T(0, 0) = 1.0;
    for (int i = 0; i < dout; ++i)
        T.row(i + 1) =
            firing_value(layer.activation, layer.leak, pre(datapoint, i)) * layer.weights.row(i);
    return T;
}

}  // namespace

std::vector<LayerBasis> interaction_basis_all(const Network& net, const Dataset& data,
                                              IBasisMode mode, double rank_tol) {
    const int L = net.depth();
    ForwardTrace trace = forward_trace(net, data);
    std::vector<LayerBasis> bases(L + 1);
    bases[L] = pca_basis(activation_gram(trace, L).matrix, L, mode, rank_tol);

    for (int l = L - 1; l >= 0; --l) {
        const Matrix G = activation_gram(trace, l).matrix;
        Matrix M;
        if (mode == IBasisMode::Global) {
            M = jacobian_gram(net, trace, l, GramKind::JacobianM, true).matrix;
        } else {
            // M from the already-transformed layer above (output-to-input
            // recursion): M^l = (1/n) sum_x (C^{l+1} T_x)^T (C^{l+1} T_x)
            const int D = static_cast<int>(trace.activations[l].cols());
            const int n = trace.n();
            M = Matrix::Zero(D, D);
            for (int x = 0; x < n; ++x) {
                Matrix J = bases[l + 1].C * transition_matrix(net.layer(l),
                                                              trace.preactivations[l + 1], x);
                M.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose(), 1.0 / n);
            }
            M = M.selfadjointView<Eigen::Lower>();
        }
        bases[l] = basis_from_grams(G, M, l, mode, rank_tol);
    }
    return bases;
}

LayerBasis interaction_basis(const Network& net, const Dataset& data, int layer, IBasisMode mode,
                             double rank_tol) {
    if (layer < 0 || layer > net.depth()) throw std::out_of_range("layer out of range");
    return interaction_basis_all(net, data, mode, rank_tol)[layer];
}

TransformReport transform_network(const Network& net, const std::vector<LayerBasis>& bases,
                                  const Dataset& data) {
    const int L = net.depth();
    if (static_cast<int>(bases.size()) != L + 1)
        throw std::invalid_argument("need one basis per activation layer");
    ForwardTrace trace = forward_trace(net, data);

    TransformReport report;
    for (int l = 0; l < L; ++l) {
        const Matrix Fl = trace.activations[l] * bases[l].C.transpose();
        const Matrix Fn = trace.activations[l + 1] * bases[l + 1].C.transpose();

        // least-squares transition f_hat^{l+1} ~= Theta f_hat^l on the data
        Matrix theta = Fl.completeOrthogonalDecomposition().solve(Fn).transpose();
        double total = theta.squaredNorm();
        double diag = 0.0;
        for (int i = 0; i < std::min(theta.rows(), theta.cols()); ++i)
            diag += theta(i, i) * theta(i, i);
        double ratio = total > 0.0 ? (total - diag) / total : 0.0;
        report.transitions.push_back(std::move(theta));
        report.off_diagonal_ratio.push_back(ratio);
        report.max_off_diagonal_ratio = std::max(report.max_off_diagonal_ratio, ratio);

        double dev = std::numeric_limits<double>::quiet_NaN();
        if (Fl.cols() == Fn.cols()) {
            dev = 0.0;
            for (int i = 0; i < Fl.cols(); ++i) {
                double s = Fl.col(i).dot(Fn.col(i)) >= 0.0 ? 1.0 : -1.0;
                dev = std::max(dev, (Fn.col(i) - s * Fl.col(i)).norm() /
                                        (Fl.col(i).norm() + 1e-300));
            }
        }
        report.fhat_deviation.push_back(dev);
    }
    return report;
}

InvarianceReport invariance_check(const Network& net, const Dataset& data, int layer,
                                  const Matrix& R, double rank_tol) {
    const int L = net.depth();
    if (layer < 1 || layer > L) throw std::out_of_range("transformable layers are 1..L");
    ForwardTrace trace = forward_trace(net, data);
    const Matrix G = activation_gram(trace, layer).matrix;
    const int D = static_cast<int>(G.rows());
    if (R.rows() != D - 1 || R.cols() != D - 1)
        throw std::invalid_argument("R must act on the non-bias coordinates of the layer");

    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                                   : std::numeric_limits<double>::infinity();
    if (!(cond < 1e8)) throw std::invalid_argument("R is too ill-conditioned");

    Matrix Rext = Matrix::Identity(D, D);
    Rext.bottomRightCorner(D - 1, D - 1) = R;
    const Matrix Rinv = Rext.partialPivLu().inverse();

    InvarianceReport report;
    report.R = R;
    report.condition_number = cond;

    LayerBasis a, b;
    if (layer == L) {
        a = pca_basis(G, layer, IBasisMode::Global, rank_tol);
        b = pca_basis(Rext * G * Rext.transpose(), layer, IBasisMode::Global, rank_tol);
    } else {
        const Matrix M = jacobian_gram(net, trace, layer, GramKind::JacobianM, true).matrix;
        const Matrix GR = Rext * G * Rext.transpose();
        const Matrix MR = Rinv.transpose() * M * Rinv;
        a = basis_from_grams(G, M, layer, IBasisMode::Global, rank_tol);
        b = basis_from_grams(GR, MR, layer, IBasisMode::Global, rank_tol);
    }

    // the transformed basis pulled back to original coordinates
    const Matrix Cb = b.C * Rext;
    const Matrix& Ca = a.C;
    const int m = std::min<int>(Ca.rows(), Cb.rows());
    const Vector evals = a.pca_fallback ? a.d_G : a.d_M;

    report.similarities.assign(m, 0.0);
    report.degenerate.assign(m, false);

    const Vector evals_b = b.pca_fallback ? b.d_G : b.d_M;
    double spec_err = 0.0;
    for (int i = 0; i < std::min<int>(evals.size(), evals_b.size()); ++i)
        spec_err = std::max(spec_err,
                            std::abs(evals[i] - evals_b[i]) / std::max(std::abs(evals[i]), 1e-300));
    report.spectrum_rel_err = spec_err;

    int i = 0;
    while (i < m) {
        // group adjacent eigenvalues closer than 1e-6 relative into a cluster
        int j = i + 1;
        while (j < m && std::abs(evals[j - 1] - evals[j]) <
                            1e-6 * std::max(std::abs(evals[i]), 1e-300))
            ++j;
        if (j - i == 1) {
            double denom = Ca.row(i).norm() * Cb.row(i).norm();
            report.similarities[i] =
                denom > 0.0 ? std::abs(Ca.row(i).dot(Cb.row(i))) / denom : 0.0;
        } else {
            // repeated eigenvalue: compare at subspace level via principal angles
            Matrix A = Ca.middleRows(i, j - i).transpose();
            Matrix B = Cb.middleRows(i, j - i).transpose();
            Matrix Qa = Eigen::HouseholderQR<Matrix>(A).householderQ() *
                        Matrix::Identity(A.rows(), A.cols());
            Matrix Qb = Eigen::HouseholderQR<Matrix>(B).householderQ() *
                        Matrix::Identity(B.rows(), B.cols());
            Eigen::JacobiSVD<Matrix> ang(Qa.transpose() * Qb);
            for (int k = i; k < j; ++k) {
                report.similarities[k] = std::min(1.0, ang.singularValues()[k - i]);
                report.degenerate[k] = true;
            }
        }
        i = j;
    }
    return report;
}

}  // namespace degen
