#include "nilm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace nilm {

namespace {

// out = W x + b, four-way unrolled accumulators so the compiler can
// vectorize without reassociation flags.
void matvec(const std::vector<double>& W, const std::vector<double>& b, size_t rows, size_t cols,
            const double* x, double* out, size_t live_cols) {
    size_t n = live_cols ? std::min(live_cols, cols) : cols;
    for (size_t r = 0; r < rows; ++r) {
        const double* w = W.data() + r * cols;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        size_t k = 0;
        for (; k + 4 <= n; k += 4) {
            a0 += w[k] * x[k];
            a1 += w[k + 1] * x[k + 1];
            a2 += w[k + 2] * x[k + 2];
            a3 += w[k + 3] * x[k + 3];
        }
        double acc = (a0 + a1) + (a2 + a3);
        for (; k < n; ++k) acc += w[k] * x[k];
        out[r] = acc + b[r];
    }
}

}  // namespace

double MlpModel::forward_scalar(std::span<const double> x, size_t live0) const {
    require(x.size() == sizes.front(), Err::DimMismatch, "mlp input dimension mismatch");
    const size_t n_layers = W.size();
    thread_local std::vector<double> buf_a, buf_b;
    buf_a.assign(x.begin(), x.end());
    size_t live = live0;
    for (size_t l = 0; l < n_layers; ++l) {
        size_t rows = sizes[l + 1];
        size_t cols = sizes[l];
        buf_b.resize(rows);
        matvec(W[l], b[l], rows, cols, buf_a.data(), buf_b.data(), live);
        live = 0;
        if (l + 1 < n_layers)
            for (double& v : buf_b)
                if (v < 0.0) v *= leaky_alpha;
        std::swap(buf_a, buf_b);
    }
    return buf_a[0];
}

MlpModel make_mlp(const std::vector<size_t>& sizes, double leaky_alpha, uint64_t seed) {
    require(sizes.size() >= 2, Err::BadConfig, "network needs at least two layers");
    MlpModel m;
    m.sizes = sizes;
    m.leaky_alpha = leaky_alpha;
    Rng rng(derive_seed(seed, 61));
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        size_t rows = sizes[l + 1], cols = sizes[l];
        double scale = std::sqrt(1.0 / double(cols));  // fan-in scaled uniform
        std::vector<double> w(rows * cols);
        for (double& v : w) v = rng.uniform(-scale, scale);
        m.W.push_back(std::move(w));
        m.b.emplace_back(rows, 0.0);
    }
    return m;
}

namespace {

struct Workspace {
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> act;   // post-activation per layer (act[0] = input copy)
    std::vector<std::vector<double>> delta;

    void resize(const std::vector<size_t>& sizes) {
        size_t n_layers = sizes.size() - 1;
        pre.resize(n_layers);
        delta.resize(n_layers);
        act.resize(sizes.size());
        act[0].resize(sizes[0]);
        for (size_t l = 0; l < n_layers; ++l) {
            pre[l].resize(sizes[l + 1]);
            delta[l].resize(sizes[l + 1]);
            act[l + 1].resize(sizes[l + 1]);
        }
    }
};

// Forward and backward for one sample; accumulates gradients of the
// squared error (y_hat - y)^2 scaled by `weight`. Dropout masks, when
// given, are per hidden unit: 0 drops, otherwise the inverted-dropout
// scale. Returns y_hat.
double accumulate_sample(const MlpModel& m, const double* x, double y, double weight,
                         Workspace& ws, MlpGradients& g,
                         const std::vector<std::vector<double>>* dropout_masks) {
    const size_t n_layers = m.W.size();
    std::copy(x, x + m.sizes[0], ws.act[0].begin());
    for (size_t l = 0; l < n_layers; ++l) {
        size_t rows = m.sizes[l + 1], cols = m.sizes[l];
        matvec(m.W[l], m.b[l], rows, cols, ws.act[l].data(), ws.pre[l].data(), 0);
        if (l + 1 < n_layers) {
            const std::vector<double>* mask =
                dropout_masks ? &(*dropout_masks)[l] : nullptr;
            for (size_t r = 0; r < rows; ++r) {
                double v = ws.pre[l][r];
                v = v < 0.0 ? v * m.leaky_alpha : v;
                if (mask) v *= (*mask)[r];
                ws.act[l + 1][r] = v;
            }
        } else {
            ws.act[l + 1][0] = ws.pre[l][0];
        }
    }
    double y_hat = ws.act[n_layers][0];

    // output delta: d/dy_hat of weight * (y_hat - y)^2
    ws.delta[n_layers - 1][0] = 2.0 * weight * (y_hat - y);
    for (size_t l = n_layers - 1;; --l) {
        size_t rows = m.sizes[l + 1], cols = m.sizes[l];
        const auto& delta = ws.delta[l];
        auto& dW = g.dW[l];
        auto& db = g.db[l];
        const auto& input = ws.act[l];
        for (size_t r = 0; r < rows; ++r) {
            double d = delta[r];
            if (d != 0.0) {
                double* dw = dW.data() + r * cols;
                for (size_t c = 0; c < cols; ++c) dw[c] += d * input[c];
            }
            db[r] += d;
        }
        if (l == 0) break;
        // propagate: delta_prev = W^T delta, through activation derivative
        auto& prev = ws.delta[l - 1];
        std::fill(prev.begin(), prev.end(), 0.0);
        for (size_t r = 0; r < rows; ++r) {
            double d = delta[r];
            if (d == 0.0) continue;
            const double* w = m.W[l].data() + r * cols;
            for (size_t c = 0; c < cols; ++c) prev[c] += d * w[c];
        }
        const std::vector<double>* mask = dropout_masks ? &(*dropout_masks)[l - 1] : nullptr;
        for (size_t c = 0; c < cols; ++c) {
            double slope = ws.pre[l - 1][c] < 0.0 ? m.leaky_alpha : 1.0;
            if (mask) slope *= (*mask)[c];
            prev[c] *= slope;
        }
    }
    return y_hat;
}

}  // namespace

double mlp_loss_and_gradients(const MlpModel& model, const DataMatrix& X,
                              std::span<const double> y, MlpGradients* grads) {
    require(X.rows > 0 && X.rows == y.size(), Err::EmptyData, "empty gradient batch");
    require(X.cols == model.sizes.front(), Err::DimMismatch, "input width mismatch");
    require(model.sizes.back() == 1, Err::BadConfig, "regression head must have one output");
    MlpGradients local;
    MlpGradients& g = grads ? *grads : local;
    g.dW.clear();
    g.db.clear();
    for (size_t l = 0; l < model.W.size(); ++l) {
        g.dW.emplace_back(model.W[l].size(), 0.0);
        g.db.emplace_back(model.b[l].size(), 0.0);
    }
    Workspace ws;
    ws.resize(model.sizes);
    double weight = 1.0 / double(X.rows);
    double loss = 0.0;
    for (size_t r = 0; r < X.rows; ++r) {
        double y_hat =
            accumulate_sample(model, X.values.data() + r * X.cols, y[r], weight, ws, g, nullptr);
        double err = y_hat - y[r];
        loss += weight * err * err;
    }
    return loss;
}

MlpTrainResult train_mlp(const DataMatrix& X, std::span<const double> y, const MlpConfig& cfg,
                         uint64_t seed) {
    require(X.rows > 0 && X.rows == y.size(), Err::EmptyData, "empty training data");
    require(X.cols == cfg.layer_sizes.front(), Err::DimMismatch, "input width mismatch");
    require(cfg.layer_sizes.back() == 1, Err::BadConfig, "regression head must have one output");

    Rng rng(derive_seed(seed, 62));
    std::vector<uint32_t> order(X.rows);
    for (size_t i = 0; i < order.size(); ++i) order[i] = uint32_t(i);
    rng.shuffle(order);

    // optional outlier trim on the extreme target quantiles
    if (cfg.outlier_fraction > 0.0 && X.rows > 10) {
        std::vector<double> sorted_targets(y.begin(), y.end());
        std::sort(sorted_targets.begin(), sorted_targets.end());
        size_t k = size_t(cfg.outlier_fraction * double(X.rows));
        if (k > 0 && 2 * k < X.rows) {
            double lo = sorted_targets[k];
            double hi = sorted_targets[X.rows - 1 - k];
            std::vector<uint32_t> kept;
            for (uint32_t i : order)
                if (y[i] >= lo && y[i] <= hi) kept.push_back(i);
            if (kept.size() >= 2) order = std::move(kept);
        }
    }

    size_t n_val = size_t(cfg.val_fraction * double(order.size()));
    n_val = std::min(n_val, order.size() - 1);
    size_t n_train = order.size() - n_val;
    std::vector<uint32_t> train_idx(order.begin(), order.begin() + long(n_train));
    std::vector<uint32_t> val_idx(order.begin() + long(n_train), order.end());

    MlpModel model = make_mlp(cfg.layer_sizes, cfg.leaky_alpha, derive_seed(seed, 63));
    const size_t n_layers = model.W.size();

    // Adam state
    MlpGradients g, m1, m2;
    for (size_t l = 0; l < n_layers; ++l) {
        g.dW.emplace_back(model.W[l].size(), 0.0);
        g.db.emplace_back(model.b[l].size(), 0.0);
        m1.dW.emplace_back(model.W[l].size(), 0.0);
        m1.db.emplace_back(model.b[l].size(), 0.0);
        m2.dW.emplace_back(model.W[l].size(), 0.0);
        m2.db.emplace_back(model.b[l].size(), 0.0);
    }
    int64_t adam_t = 0;
    auto adam_update = [&](std::vector<double>& w, std::vector<double>& grad,
                           std::vector<double>& mom1, std::vector<double>& mom2, double bc1,
                           double bc2) {
        const auto& a = cfg.adam;
        for (size_t i = 0; i < w.size(); ++i) {
            double gi = grad[i];
            mom1[i] = a.beta1 * mom1[i] + (1.0 - a.beta1) * gi;
            mom2[i] = a.beta2 * mom2[i] + (1.0 - a.beta2) * gi * gi;
            double mh = mom1[i] / bc1;
            double vh = mom2[i] / bc2;
            w[i] -= a.lr * mh / (std::sqrt(vh) + a.eps);
        }
    };

    Workspace ws;
    ws.resize(model.sizes);
    std::vector<std::vector<double>> masks(n_layers > 0 ? n_layers - 1 : 0);
    for (size_t l = 0; l + 1 < n_layers; ++l) masks[l].resize(model.sizes[l + 1]);
    const double keep = 1.0 - cfg.dropout;

    auto validation_mae = [&]() {
        const auto& idx = val_idx.empty() ? train_idx : val_idx;
        double acc = 0.0;
        for (uint32_t i : idx)
            acc += std::fabs(model.forward_scalar(
                                 std::span<const double>(X.values.data() + size_t(i) * X.cols,
                                                         X.cols)) -
                             y[i]);
        return acc / double(idx.size());
    };

    MlpModel best = model;
    double best_mae = validation_mae();
    int since_best = 0;
    int epochs_run = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        for (size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
            double weight = 1.0 / double(stop - start);
            for (size_t l = 0; l < n_layers; ++l) {
                std::fill(g.dW[l].begin(), g.dW[l].end(), 0.0);
                std::fill(g.db[l].begin(), g.db[l].end(), 0.0);
            }
            double batch_loss = 0.0;
            for (size_t s = start; s < stop; ++s) {
                uint32_t i = train_idx[s];
                if (cfg.dropout > 0.0) {
                    for (auto& mask : masks)
                        for (double& v : mask)
                            v = rng.next_double() < cfg.dropout ? 0.0 : 1.0 / keep;
                }
                double y_hat = accumulate_sample(model, X.values.data() + size_t(i) * X.cols,
                                                 y[i], weight, ws, g,
                                                 cfg.dropout > 0.0 ? &masks : nullptr);
                double err = y_hat - y[i];
                batch_loss += weight * err * err;
            }
            require(std::isfinite(batch_loss), Err::NonFiniteLoss, "training diverged");
            ++adam_t;
            double bc1 = 1.0 - std::pow(cfg.adam.beta1, double(adam_t));
            double bc2 = 1.0 - std::pow(cfg.adam.beta2, double(adam_t));
            for (size_t l = 0; l < n_layers; ++l) {
                adam_update(model.W[l], g.dW[l], m1.dW[l], m2.dW[l], bc1, bc2);
                adam_update(model.b[l], g.db[l], m1.db[l], m2.db[l], bc1, bc2);
            }
        }
        epochs_run = epoch + 1;
        double mae = validation_mae();
        require(std::isfinite(mae), Err::NonFiniteLoss, "validation diverged");
        if (mae < best_mae) {
            best_mae = mae;
            best = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return {std::move(best), epochs_run, best_mae};
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
    require(bool(is), Err::BadFile, "truncated mlp data");
    return v;
}

}  // namespace

void MlpModel::save(std::ostream& os) const {
    put(os, uint64_t(sizes.size()));
    for (size_t s : sizes) put(os, uint64_t(s));
    put(os, leaky_alpha);
    for (size_t l = 0; l < W.size(); ++l) {
        os.write(reinterpret_cast<const char*>(W[l].data()),
                 std::streamsize(W[l].size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(b[l].data()),
                 std::streamsize(b[l].size() * sizeof(double)));
    }
}

MlpModel MlpModel::load(std::istream& is) {
    MlpModel m;
    uint64_t n = get<uint64_t>(is);
    require(n >= 2 && n < 64, Err::BadFile, "bad mlp layer count");
    m.sizes.resize(n);
    for (auto& s : m.sizes) s = size_t(get<uint64_t>(is));
    m.leaky_alpha = get<double>(is);
    for (size_t l = 0; l + 1 < n; ++l) {
        m.W.emplace_back(m.sizes[l + 1] * m.sizes[l]);
        m.b.emplace_back(m.sizes[l + 1]);
        is.read(reinterpret_cast<char*>(m.W[l].data()),
                std::streamsize(m.W[l].size() * sizeof(double)));
        is.read(reinterpret_cast<char*>(m.b[l].data()),
                std::streamsize(m.b[l].size() * sizeof(double)));
        require(bool(is), Err::BadFile, "truncated mlp weights");
    }
    return m;
}

}  // namespace nilm
