#include "nilm/features.hpp"

#include <cmath>
#include <sstream>

namespace nilm {

namespace {
std::atomic<uint64_t> g_extract_calls{0};
}

std::atomic<uint64_t>& feature_extraction_counter() { return g_extract_calls; }

void WaveShapeConfig::validate() const {
    require(epsilon > 0.0, Err::BadConfig, "wave-shape epsilon must be positive");
    for (const auto& rp : ratio_points) {
        require(rp.phase_a >= 0.0 && rp.phase_a < 1.0 && rp.phase_b >= 0.0 && rp.phase_b < 1.0,
                Err::BadConfig, "ratio phases must lie in [0, 1)");
        require(rp.phase_a != rp.phase_b, Err::BadConfig, "ratio phases must differ");
    }
}

WaveShapeConfig WaveShapeConfig::defaults() {
    // Calibrated against the default palette: the CFL bank's conduction
    // spike sits near 0.10 of the cycle and recurs at 0.60; the motor loads
    // shift the shoulder near 0.35. Each pair compares an off-peak point
    // against the main 60-Hz peak region.
    WaveShapeConfig cfg;
    cfg.ratio_points = {
        {0.10, 0.25},
        {0.35, 0.25},
        {0.60, 0.75},
        {0.05, 0.15},
    };
    cfg.epsilon = 0.01;
    return cfg;
}

std::vector<std::string> FeatureLayout::names(size_t ratio_count) {
    std::vector<std::string> out;
    out.reserve(1 + 14 + kWaveletCoeffCount + ratio_count + 1);
    out.push_back("rms");
    for (int k : kHarmonicOrders) out.push_back("h" + std::to_string(k));
    for (int k : kHarmonicOrders) out.push_back("h" + std::to_string(k) + "n");
    for (size_t i = 0; i < kWaveletCoeffCount; ++i)
        out.push_back("w" + std::to_string(kWaveletCoeffFirst + i));
    for (size_t i = 0; i < ratio_count; ++i) out.push_back("r" + std::to_string(i + 1));
    out.push_back("midmax");
    return out;
}

std::string FeatureLayout::header(size_t ratio_count) {
    std::ostringstream ss;
    auto n = names(ratio_count);
    for (size_t i = 0; i < n.size(); ++i) {
        if (i) ss << ',';
        ss << n[i];
    }
    return ss.str();
}

uint64_t FeatureLayout::schema_hash(size_t ratio_count) { return fnv1a(header(ratio_count)); }

double cycle_rms(std::span<const double> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (double v : samples) acc += v * v;
    return std::sqrt(acc / double(samples.size()));
}

std::array<double, 7> harmonic_magnitudes(std::span<const double> cycle) {
    const size_t n = cycle.size();
    require(n >= 2, Err::CycleTooShort, "cycle too short for harmonic analysis");
    std::array<double, 7> out{};
    for (size_t b = 0; b < kHarmonicOrders.size(); ++b) {
        double omega = 2.0 * M_PI * double(kHarmonicOrders[b]) / double(n);
        double coeff = 2.0 * std::cos(omega);
        double s1 = 0.0, s2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double s0 = cycle[i] + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
        out[b] = 2.0 / double(n) * std::sqrt(std::max(0.0, power));
    }
    return out;
}

std::array<double, 7> normalize_l2(const std::array<double, 7>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    std::array<double, 7> out{};
    if (norm > 0.0)
        for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

std::array<double, 12> dwt_db7_level8(std::span<const double> cycle) {
    auto band = dwt::db7_level8_detail(cycle, dwt::Extension::symmetric);
    require(band.size() >= kWaveletCoeffFirst + kWaveletCoeffCount, Err::CycleTooShort,
            "level-8 band shorter than coefficient range 12..23");
    std::array<double, 12> out{};
    for (size_t i = 0; i < kWaveletCoeffCount; ++i) out[i] = band[kWaveletCoeffFirst + i];
    return out;
}

namespace {

// Cycle value at a phase in [0, 1), linear interpolation with periodic wrap.
double value_at_phase(std::span<const double> cycle, double phase) {
    double n = double(cycle.size());
    double pos = phase * n;
    size_t i = size_t(pos);
    double frac = pos - double(i);
    size_t j = i + 1 < cycle.size() ? i + 1 : 0;
    return cycle[i] + frac * (cycle[j] - cycle[i]);
}

}  // namespace

std::vector<double> wave_shape_features(std::span<const double> cycle,
                                        const WaveShapeConfig& cfg) {
    cfg.validate();
    require(cycle.size() >= 6, Err::CycleTooShort, "cycle too short for wave-shape features");
    std::vector<double> out;
    out.reserve(cfg.ratio_points.size() + 1);
    for (const auto& rp : cfg.ratio_points) {
        double a = value_at_phase(cycle, rp.phase_a);
        double b = value_at_phase(cycle, rp.phase_b);
        double guard = b >= 0.0 ? b + cfg.epsilon : b - cfg.epsilon;
        out.push_back(a / guard);
    }
    // Max over the middle third of the positive half cycle. Segmentation
    // starts every cycle at a positive-going zero crossing, so the first
    // half cycle is the positive one.
    size_t n = cycle.size();
    size_t lo = (n + 5) / 6;  // ceil(n/6)
    size_t hi = n / 3;
    double best = cycle[lo];
    for (size_t i = lo; i < hi; ++i) best = std::max(best, cycle[i]);
    out.push_back(best);
    return out;
}

std::vector<double> extract_features(std::span<const double> cycle, const WaveShapeConfig& cfg) {
    g_extract_calls.fetch_add(1, std::memory_order_relaxed);
    std::vector<double> out;
    out.reserve(FeatureLayout{cfg.ratio_count()}.dimension());
    out.push_back(cycle_rms(cycle));
    auto h = harmonic_magnitudes(cycle);
    auto hn = normalize_l2(h);
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), hn.begin(), hn.end());
    auto w = dwt_db7_level8(cycle);
    out.insert(out.end(), w.begin(), w.end());
    auto ws = wave_shape_features(cycle, cfg);
    out.insert(out.end(), ws.begin(), ws.end());
    return out;
}

}  // namespace nilm
