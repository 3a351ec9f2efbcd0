#include "degen/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace degen {

double Region::volume() const {
    double v = 1.0;
    for (int i = 0; i < half_widths.size(); ++i) v *= 2.0 * half_widths[i];
    return v;
}

void Region::validate() const {
    if (center.size() != half_widths.size())
        throw std::invalid_argument("region center/half_widths size mismatch");
    for (int i = 0; i < half_widths.size(); ++i)
        if (!(half_widths[i] > 0.0) || !std::isfinite(half_widths[i]))
            throw std::invalid_argument("region half-widths must be positive and finite");
}

Region default_region(const Vector& center, double rel) {
    Region r;
    r.center = center;
    r.half_widths = rel * (Vector::Ones(center.size()) + center.cwiseAbs());
    return r;
}

std::vector<double> log_grid(double eps_min, double eps_max, int points_per_decade) {
    if (!(eps_min > 0.0) || !(eps_max > eps_min))
        throw std::invalid_argument("need 0 < eps_min < eps_max");
    const double decades = std::log10(eps_max / eps_min);
    const int steps = std::max(1, static_cast<int>(std::round(decades * points_per_decade)));
    std::vector<double> grid;
    grid.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i)
        grid.push_back(eps_min * std::pow(eps_max / eps_min, static_cast<double>(i) / steps));
    return grid;
}

VolumeCurve estimate_volume(const LossLandscape& landscape, const Region& region,
                            const std::vector<double>& eps_grid, long n_samples,
                            std::uint64_t seed) {
    region.validate();
    if (region.center.size() != landscape.dimension)
        throw std::invalid_argument("region dimension does not match landscape");
    if (n_samples < 1000) throw std::invalid_argument("n_samples must be >= 1000");
    if (!std::is_sorted(eps_grid.begin(), eps_grid.end()))
        throw std::invalid_argument("eps grid must be sorted ascending");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    std::vector<double> losses;
    losses.reserve(n_samples);
    long rejected = 0;
    Vector theta(landscape.dimension);
    for (long s = 0; s < n_samples; ++s) {
        for (int i = 0; i < landscape.dimension; ++i)
            theta[i] = region.center[i] + region.half_widths[i] * uni(rng);
        double loss = landscape.evaluate(theta);
        if (!std::isfinite(loss)) {
            ++rejected;
            continue;
        }
        losses.push_back(loss);
    }
    if (rejected > n_samples / 1000)
        throw std::runtime_error("landscape returned non-finite values on > 0.1% of samples");

    std::sort(losses.begin(), losses.end());
    const double box = region.volume();
    const double n = static_cast<double>(losses.size());

    VolumeCurve curve;
    curve.eps = eps_grid;
    curve.n_samples = n_samples;
    curve.seed = seed;
    curve.region_volume = box;
    for (double eps : eps_grid) {
        long count = std::lower_bound(losses.begin(), losses.end(), eps) - losses.begin();
        double p = count / n;
        curve.hits.push_back(count);
        curve.volume.push_back(p * box);
        curve.ci_sigma.push_back(std::sqrt(p * (1.0 - p) / n) * box);
    }
    return curve;
}

LambdaCurve lambda_curve(const VolumeCurve& curve, int window, long min_hits) {
    const int m = static_cast<int>(curve.eps.size());
    if (m < 3) throw std::invalid_argument("need at least 3 grid points");
    if (window < 3) throw std::invalid_argument("window must be >= 3");
    bool any_hits = false;
    for (long h : curve.hits) any_hits = any_hits || h > 0;
    if (!any_hits) throw std::runtime_error("all volume bins are empty");

    LambdaCurve lc;
    lc.eps = curve.eps;
    lc.window = window;
    lc.min_hits = min_hits;
    lc.lambda.assign(m, std::numeric_limits<double>::quiet_NaN());
    const int half = window / 2;
    for (int i = 0; i < m; ++i) {
        // centered least-squares slope of log V vs log eps
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (int j = std::max(0, i - half); j <= std::min(m - 1, i + half); ++j) {
            if (curve.hits[j] < min_hits) continue;
            double x = std::log(curve.eps[j]);
            double y = std::log(curve.volume[j]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        if (count < 2) continue;
        double denom = count * sxx - sx * sx;
        if (std::abs(denom) < 1e-30) continue;
        lc.lambda[i] = (count * sxy - sx * sy) / denom;
    }
    return lc;
}

LossLandscape analytic_landscape(const std::string& name, double c) {
    LossLandscape ls;
    ls.kind = name;
    if (name == "quartic_toy") {
        ls.dimension = 1;
        ls.center = Vector::Zero(1);
        ls.evaluate = [c](const Vector& w) {
            double x = w[0];
            return c * c * x * x + x * x * x * x;
        };
    } else if (name == "cross") {
        ls.dimension = 2;
        ls.center = Vector::Zero(2);
        ls.evaluate = [](const Vector& w) { return w[0] * w[0] * w[1] * w[1]; };
    } else if (name == "plane3") {
        ls.dimension = 3;
        ls.center = Vector::Zero(3);
        ls.evaluate = [](const Vector& w) { return w[0] * w[0]; };
    } else {
        throw std::invalid_argument("unknown analytic landscape: " + name);
    }
    return ls;
}

LossLandscape behavioral_landscape(const Network& net, const Dataset& data,
                                   std::vector<int> layers) {
    if (layers.empty())
        for (int l = 0; l < net.depth(); ++l) layers.push_back(l);
    std::sort(layers.begin(), layers.end());

    Matrix ref_outputs = net.forward(data.inputs);
    int dim = 0;
    for (int l : layers) dim += static_cast<int>(net.layer(l).weights.size());

    Vector center(dim);
    int pos = 0;
    for (int l : layers) {
        const Matrix& w = net.layer(l).weights;
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) center[pos++] = w(i, j);
    }

    LossLandscape ls;
    ls.kind = "behavioral";
    ls.dimension = dim;
    ls.center = center;
    ls.evaluate = [net, data, ref_outputs, layers](const Vector& theta) mutable {
        Network candidate = net;
        int p = 0;
        for (int l : layers) {
            Matrix& w = candidate.layer(l).weights;
            for (int i = 0; i < w.rows(); ++i)
                for (int j = 0; j < w.cols(); ++j) w(i, j) = theta[p++];
        }
        return behavioral_loss(candidate, ref_outputs, data);
    };
    return ls;
}

EffectiveParams effective_params(const LossLandscape& landscape, const Region& region, double eps,
                                 const SamplerCfg& cfg) {
    auto grid = log_grid(eps * std::pow(10.0, -cfg.decades_below),
                         eps * std::pow(10.0, cfg.decades_above), cfg.points_per_decade);
    EffectiveParams result;
    result.N = landscape.dimension;
    result.eps_used = eps;
    result.curve = estimate_volume(landscape, region, grid, cfg.n_samples, cfg.seed);

    int at = 0;
    for (size_t i = 0; i < grid.size(); ++i)
        if (std::abs(std::log(grid[i] / eps)) < std::abs(std::log(grid[at] / eps)))
            at = static_cast<int>(i);
    if (result.curve.hits[at] == 0)
        throw std::runtime_error(
            "no volume hits at the requested loss scale; widen the epsilon range or the region");

    result.lambda = lambda_curve(result.curve, cfg.window, cfg.min_hits);
    result.lambda_hat = result.lambda.lambda[at];
    if (!std::isfinite(result.lambda_hat))
        throw std::runtime_error("lambda estimate unavailable at the requested loss scale");
    result.n_eff = 2.0 * result.lambda_hat;
    result.n_free = result.N - result.n_eff;
    return result;
}

EffectiveParams effective_params(const Network& net, const Dataset& data, const Region& region,
                                 double eps, const SamplerCfg& cfg) {
    LossLandscape ls = behavioral_landscape(net, data);
    return effective_params(ls, region, eps, cfg);
}

}  // namespace degen
