#include "nilm/yeojohnson.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace nilm {

double yj_transform(double y, double lambda) {
    if (y >= 0.0) {
        if (lambda == 0.0) return std::log1p(y);
        return std::expm1(lambda * std::log1p(y)) / lambda;
    }
    double two_minus = 2.0 - lambda;
    if (two_minus == 0.0) return -std::log1p(-y);
    return -std::expm1(two_minus * std::log1p(-y)) / two_minus;
}

double yj_log_likelihood(std::span<const double> column, double lambda) {
    const size_t n = column.size();
    double sum = 0.0, sum_sq = 0.0, jacobian = 0.0;
    for (double y : column) {
        double t = yj_transform(y, lambda);
        sum += t;
        sum_sq += t * t;
        jacobian += (y >= 0.0 ? 1.0 : -1.0) * std::log1p(std::fabs(y));
    }
    double mean = sum / double(n);
    double var = sum_sq / double(n) - mean * mean;
    if (!(var > 0.0) || !std::isfinite(var))
        return -std::numeric_limits<double>::infinity();
    return -0.5 * double(n) * std::log(var) + (lambda - 1.0) * jacobian;
}

double fit_yeo_johnson(std::span<const double> column) {
    require(column.size() >= 2, Err::DegenerateColumn, "need at least two values");
    double first = column[0];
    bool distinct = false;
    for (double v : column)
        if (v != first) {
            distinct = true;
            break;
        }
    require(distinct, Err::DegenerateColumn, "constant column");

    // coarse scan, then golden-section refinement around the best cell
    const double lo_bound = -5.0, hi_bound = 5.0;
    const int steps = 100;
    double best_lambda = lo_bound;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
        double lam = lo_bound + (hi_bound - lo_bound) * double(i) / double(steps);
        double ll = yj_log_likelihood(column, lam);
        if (ll > best_ll) {
            best_ll = ll;
            best_lambda = lam;
        }
    }
    double cell = (hi_bound - lo_bound) / double(steps);
    double a = std::max(lo_bound, best_lambda - cell);
    double b = std::min(hi_bound, best_lambda + cell);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = yj_log_likelihood(column, x1);
    double f2 = yj_log_likelihood(column, x2);
    while (b - a > 1e-5) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = yj_log_likelihood(column, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = yj_log_likelihood(column, x1);
        }
    }
    return (a + b) / 2.0;
}

namespace {

bool is_binary_column(const std::vector<std::vector<double>>& rows, size_t col) {
    for (const auto& r : rows) {
        double v = r[col];
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

}  // namespace

void InputTransform::fit(const std::vector<std::vector<double>>& rows, size_t padded) {
    require(!rows.empty(), Err::EmptyData, "no rows to fit transform");
    raw_dim = rows.front().size();
    require(raw_dim <= padded, Err::BadConfig, "feature dimension exceeds network input width");
    padded_dim = padded;
    lambdas.assign(raw_dim, 1.0);
    yj_applied.assign(raw_dim, 0);
    active.assign(raw_dim, 1);
    means.assign(raw_dim, 0.0);
    stds.assign(raw_dim, 1.0);

    std::vector<double> column(rows.size());
    for (size_t c = 0; c < raw_dim; ++c) {
        for (size_t r = 0; r < rows.size(); ++r) column[r] = rows[r][c];
        bool constant = true;
        for (double v : column)
            if (v != column.front()) {
                constant = false;
                break;
            }
        if (constant) {
            active[c] = 0;  // dropped, recorded
            continue;
        }
        if (!is_binary_column(rows, c)) {
            lambdas[c] = fit_yeo_johnson(column);
            yj_applied[c] = 1;
            for (double& v : column) v = yj_transform(v, lambdas[c]);
        }
        double sum = 0.0, sum_sq = 0.0;
        for (double v : column) {
            sum += v;
            sum_sq += v * v;
        }
        double mean = sum / double(column.size());
        double var = sum_sq / double(column.size()) - mean * mean;
        double sd = std::sqrt(std::max(0.0, var));
        if (!(sd > 0.0)) {
            active[c] = 0;
            continue;
        }
        means[c] = mean;
        stds[c] = sd;
    }
}

size_t InputTransform::live_dim() const {
    size_t n = 0;
    for (uint8_t a : active) n += a;
    return n;
}

void InputTransform::apply_into(std::span<const double> x, std::span<double> out) const {
    require(x.size() == raw_dim, Err::DimMismatch, "transform input dimension mismatch");
    require(out.size() == padded_dim, Err::DimMismatch, "transform output dimension mismatch");
    size_t j = 0;
    for (size_t c = 0; c < raw_dim; ++c) {
        if (!active[c]) continue;
        double v = x[c];
        if (yj_applied[c]) v = yj_transform(v, lambdas[c]);
        out[j++] = (v - means[c]) / stds[c];
    }
    for (; j < padded_dim; ++j) out[j] = 0.0;
}

std::vector<double> InputTransform::apply(std::span<const double> x) const {
    std::vector<double> out(padded_dim);
    apply_into(x, out);
    return out;
}

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(bool(is), Err::BadFile, "truncated transform data");
    return v;
}

}  // namespace

void InputTransform::save(std::ostream& os) const {
    put(os, uint64_t(raw_dim));
    put(os, uint64_t(padded_dim));
    for (size_t c = 0; c < raw_dim; ++c) {
        put(os, lambdas[c]);
        put(os, yj_applied[c]);
        put(os, active[c]);
        put(os, means[c]);
        put(os, stds[c]);
    }
}

InputTransform InputTransform::load(std::istream& is) {
    InputTransform t;
    t.raw_dim = size_t(get<uint64_t>(is));
    t.padded_dim = size_t(get<uint64_t>(is));
    t.lambdas.resize(t.raw_dim);
    t.yj_applied.resize(t.raw_dim);
    t.active.resize(t.raw_dim);
    t.means.resize(t.raw_dim);
    t.stds.resize(t.raw_dim);
    for (size_t c = 0; c < t.raw_dim; ++c) {
        t.lambdas[c] = get<double>(is);
        t.yj_applied[c] = get<uint8_t>(is);
        t.active[c] = get<uint8_t>(is);
        t.means[c] = get<double>(is);
        t.stds[c] = get<double>(is);
    }
    return t;
}

void OutputScaler::fit(std::span<const double> targets) {
    require(!targets.empty(), Err::EmptyData, "no targets");
    double sum = 0.0, sum_sq = 0.0;
    for (double y : targets) {
        sum += y;
        sum_sq += y * y;
    }
    mean = sum / double(targets.size());
    double var = sum_sq / double(targets.size()) - mean * mean;
    std = std::sqrt(std::max(0.0, var));
    require(std > 0.0, Err::DegenerateColumn, "constant regression targets");
}

}  // namespace nilm
