#pragma once

#include <cstdint>
#include <functional>

#include "degen/hessian.hpp"
#include "degen/network.hpp"

namespace degen {

/// A nonnegative loss over parameter space with a known minimum at `center`.
struct LossLandscape {
    std::function<double(const Vector&)> evaluate;
    int dimension = 0;
    Vector center;
    std::string kind;
};

/// Axis-aligned sampling box around a landscape's center.
struct Region {
    Vector center;
    Vector half_widths;

    double volume() const;
    void validate() const;
};

/// Default box: half-width 0.1 * (1 + |center_i|) per coordinate.
Region default_region(const Vector& center, double rel = 0.1);

/// Monte Carlo sublevel-set volume estimates on a log-spaced loss grid.
struct VolumeCurve {
    std::vector<double> eps;
    std::vector<double> volume;    // V_hat(eps) = hit_fraction * box volume
    std::vector<double> ci_sigma;  // one binomial standard deviation, volume units
    std::vector<long> hits;
    long n_samples = 0;
    std::uint64_t seed = 0;
    double region_volume = 0.0;
};

VolumeCurve estimate_volume(const LossLandscape& landscape, const Region& region,
                            const std::vector<double>& eps_grid, long n_samples,
                            std::uint64_t seed);

std::vector<double> log_grid(double eps_min, double eps_max, int points_per_decade);

/// Local slopes of log V against log eps. Bins with fewer than min_hits hits
/// are excluded; entries without enough usable window points are NaN.
struct LambdaCurve {
    std::vector<double> eps;
    std::vector<double> lambda;
    int window = 7;
    long min_hits = 30;
};

LambdaCurve lambda_curve(const VolumeCurve& curve, int window = 7, long min_hits = 30);

/// quartic_toy(c): L(w) = c^2 w^2 + w^4; cross: L = w1^2 w2^2;
/// plane3: L(w1,w2,w3) = w1^2.
LossLandscape analytic_landscape(const std::string& name, double c = 0.0);

/// Behavioral loss of `net` against itself as a landscape over the flattened
/// weights of the chosen layers (all layers if empty).
LossLandscape behavioral_landscape(const Network& net, const Dataset& data,
                                   std::vector<int> layers = {});

struct SamplerCfg {
    long n_samples = 200000;
    std::uint64_t seed = 1;
    int window = 7;
    long min_hits = 30;
    double decades_below = 2.0;
    double decades_above = 2.0;
    int points_per_decade = 5;
};

struct EffectiveParams {
    double lambda_hat = 0.0;
    double n_eff = 0.0;
    double n_free = 0.0;
    int N = 0;
    double eps_used = 0.0;
    VolumeCurve curve;
    LambdaCurve lambda;
};

/// N_eff(eps) = 2 * lambda_hat of the given landscape at loss scale eps.
EffectiveParams effective_params(const LossLandscape& landscape, const Region& region, double eps,
                                 const SamplerCfg& cfg = {});

/// Behavioral-loss variant, region centered at the net's own parameters.
EffectiveParams effective_params(const Network& net, const Dataset& data, const Region& region,
                                 double eps, const SamplerCfg& cfg = {});

}  // namespace degen
