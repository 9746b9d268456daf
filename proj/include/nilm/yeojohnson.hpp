#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "nilm/common.hpp"

namespace nilm {

// Yeo-Johnson power transform, the piecewise form that supports positive
// and negative inputs. Strictly monotone in y for any lambda; maps 0 to 0.
double yj_transform(double y, double lambda);

// Profile log-likelihood of lambda for a Gaussian target.
double yj_log_likelihood(std::span<const double> column, double lambda);

// Maximum-likelihood lambda via scalar search over [-5, 5] (coarse scan
// plus golden-section refinement to 1e-5).
double fit_yeo_johnson(std::span<const double> column);

// Per-feature Yeo-Johnson followed by standardization. Binary columns skip
// the power transform; zero-variance columns are dropped and recorded. The
// output vector is zero-padded to padded_dim.
struct InputTransform {
    std::vector<double> lambdas;
    std::vector<uint8_t> yj_applied;
    std::vector<uint8_t> active;
    std::vector<double> means;
    std::vector<double> stds;
    size_t raw_dim = 0;
    size_t padded_dim = 128;

    void fit(const std::vector<std::vector<double>>& rows, size_t padded);
    std::vector<double> apply(std::span<const double> x) const;
    void apply_into(std::span<const double> x, std::span<double> out) const;
    size_t live_dim() const;  // count of kept columns (<= padded_dim)

    void save(std::ostream& os) const;
    static InputTransform load(std::istream& is);
};

struct OutputScaler {
    double mean = 0.0;
    double std = 1.0;

    void fit(std::span<const double> targets);
    double scale(double y) const { return (y - mean) / std; }
    double unscale(double v) const { return v * std + mean; }
};

}  // namespace nilm
