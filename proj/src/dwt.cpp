#include "nilm/dwt.hpp"

namespace nilm {
namespace dwt {

std::array<double, 14> db7_wavelet_filter() {
    std::array<double, 14> g{};
    for (int n = 0; n < 14; ++n) {
        double v = kDb7Scaling[13 - n];
        g[size_t(n)] = (n % 2 == 0) ? v : -v;
    }
    return g;
}

namespace {

// Half-point symmetric extension lookup: index may run past either end by
// any amount; the reflection folds until it lands inside [0, n).
inline size_t reflect(long long idx, long long n) {
    long long period = 2 * n;
    long long m = idx % period;
    if (m < 0) m += period;
    if (m >= n) m = period - 1 - m;
    return size_t(m);
}

inline size_t wrap(long long idx, long long n) {
    long long m = idx % n;
    if (m < 0) m += n;
    return size_t(m);
}

}  // namespace

std::vector<double> down_convolve(std::span<const double> x, std::span<const double> f,
                                  Extension ext) {
    const long long n = (long long)x.size();
    const long long L = (long long)f.size();
    require(n >= 1, Err::CycleTooShort, "empty input to down_convolve");

    if (ext == Extension::periodic) {
        long long out_len = (n + 1) / 2;
        std::vector<double> y(size_t(out_len));
        for (long long i = 0; i < out_len; ++i) {
            double acc = 0.0;
            for (long long m = 0; m < L; ++m) acc += f[size_t(m)] * x[wrap(2 * i + 1 - m, n)];
            y[size_t(i)] = acc;
        }
        return y;
    }

    long long out_len = (n + L - 1) / 2;
    std::vector<double> y(size_t(out_len));
    for (long long i = 0; i < out_len; ++i) {
        double acc = 0.0;
        long long base = 2 * i + 1;
        long long lo = base - (L - 1);
        if (lo >= 0 && base < n) {
            // interior: no extension lookups needed
            const double* xs = x.data() + lo;
            for (long long m = 0; m < L; ++m) acc += f[size_t(m)] * xs[L - 1 - m];
        } else {
            for (long long m = 0; m < L; ++m) acc += f[size_t(m)] * x[reflect(base - m, n)];
        }
        y[size_t(i)] = acc;
    }
    return y;
}

Pyramid wavedec(std::span<const double> x, int levels, Extension ext) {
    require(levels >= 1, Err::BadConfig, "wavedec needs at least one level");
    auto g = db7_wavelet_filter();
    std::span<const double> h(kDb7Scaling);
    Pyramid p;
    std::vector<double> approx(x.begin(), x.end());
    for (int l = 0; l < levels; ++l) {
        p.details.push_back(down_convolve(approx, g, ext));
        approx = down_convolve(approx, h, ext);
    }
    p.approx = std::move(approx);
    return p;
}

std::vector<double> db7_level8_detail(std::span<const double> x, Extension ext) {
    require(x.size() >= 256, Err::CycleTooShort, "need at least 2^8 samples for an 8-level DWT");
    auto g = db7_wavelet_filter();
    std::span<const double> h(kDb7Scaling);
    std::vector<double> approx(x.begin(), x.end());
    for (int l = 0; l < 7; ++l) approx = down_convolve(approx, h, ext);
    return down_convolve(approx, g, ext);
}

}  // namespace dwt
}  // namespace nilm
