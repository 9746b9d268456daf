#include "nilm/waveform.hpp"

#include <algorithm>
#include <cmath>

namespace nilm {

void Waveform::validate() const {
    require(sample_rate > 0.0, Err::BadConfig, "waveform sample_rate must be positive");
    for (double v : samples)
        require(std::isfinite(v), Err::BadConfig, "waveform samples must be finite");
}

double interp_at(std::span<const double> samples, double index) {
    if (samples.empty()) return 0.0;
    if (index <= 0.0) return samples.front();
    double last = double(samples.size() - 1);
    if (index >= last) return samples.back();
    size_t i = size_t(index);
    double frac = index - double(i);
    return samples[i] + frac * (samples[i + 1] - samples[i]);
}

std::vector<double> resample_span(std::span<const double> src, double begin, double end,
                                  size_t count) {
    require(count > 0, Err::BadConfig, "resample count must be positive");
    require(end > begin, Err::BadConfig, "resample span must be nonempty");
    std::vector<double> out(count);
    double step = (end - begin) / double(count);
    for (size_t m = 0; m < count; ++m) out[m] = interp_at(src, begin + double(m) * step);
    return out;
}

namespace {

// Centered moving average with the window shrunk symmetrically near the
// edges. Zero phase, so crossing locations of a clean sine are unmoved.
std::vector<double> smooth_centered(const std::vector<double>& x, size_t half_width) {
    size_t n = x.size();
    if (half_width == 0 || n < 3) return x;
    std::vector<double> prefix(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        size_t h = std::min({half_width, i, n - 1 - i});
        size_t lo = i - h;
        size_t hi = i + h + 1;
        out[i] = (prefix[hi] - prefix[lo]) / double(hi - lo);
    }
    return out;
}

}  // namespace

std::vector<double> detect_zero_crossings(const Waveform& ref, double nominal_freq_hz,
                                          double hysteresis_fraction, double spacing_tolerance) {
    ref.validate();
    require(nominal_freq_hz > 40.0 && nominal_freq_hz < 80.0, Err::BadConfig,
            "nominal frequency must be in (40, 80) Hz");
    double period = ref.sample_rate / nominal_freq_hz;
    require(double(ref.size()) >= 2.0 * period, Err::TooShort,
            "need at least two nominal cycles of samples");

    // Noise-robust copy for detection only; window ~1/11 of a period keeps
    // zeros of the fundamental in place while averaging out broadband noise.
    size_t half_width = size_t(std::max(0.0, std::floor(period / 22.0)));
    std::vector<double> s = smooth_centered(ref.samples, half_width);

    double amp = 0.0;
    for (double v : s) amp = std::max(amp, std::fabs(v));
    require(amp > 0.0, Err::AllZero, "signal amplitude below hysteresis band");
    double band = hysteresis_fraction * amp;

    double min_gap = (1.0 - spacing_tolerance) * period;
    std::vector<double> crossings;
    bool armed = true;  // catches a crossing right at the start of the trace
    size_t n = s.size();
    for (size_t i = 0; i < n; ++i) {
        if (s[i] <= -band) {
            armed = true;
        } else if (armed && s[i] >= band) {
            // Walk back to the last nonpositive sample and interpolate.
            size_t j = i;
            while (j > 0 && s[j - 1] > 0.0) --j;
            if (j > 0) {
                double a = s[j - 1];
                double b = s[j];
                double cross = double(j - 1) + (-a) / (b - a);
                if (crossings.empty() || cross - crossings.back() >= min_gap)
                    crossings.push_back(cross);
            }
            // j == 0: the trace began inside a positive half-cycle.
            armed = false;
        }
    }
    require(crossings.size() >= 2, Err::TooShort, "fewer than 2 zero crossings found");
    return crossings;
}

std::vector<CycleObservation> segment_cycles(const Waveform& i_tot,
                                             const std::vector<double>& crossings,
                                             size_t cycle_samples, int dataset_id) {
    i_tot.validate();
    require(crossings.size() >= 2, Err::TooShort, "need at least 2 crossings to segment");
    require(cycle_samples >= 2, Err::BadConfig, "cycle_samples too small");
    std::vector<CycleObservation> cycles;
    cycles.reserve(crossings.size() - 1);
    std::span<const double> src(i_tot.samples);
    for (size_t k = 0; k + 1 < crossings.size(); ++k) {
        CycleObservation obs;
        obs.samples = resample_span(src, crossings[k], crossings[k + 1], cycle_samples);
        obs.start_index = crossings[k];
        obs.source_dataset_id = dataset_id;
        obs.observation_id = int64_t(k);
        cycles.push_back(std::move(obs));
    }
    return cycles;
}

std::vector<CycleObservation> segment_waveform(const Waveform& i_tot, const Waveform* voltage_ref,
                                               const SegmentationConfig& cfg, int dataset_id) {
    const Waveform& ref = voltage_ref ? *voltage_ref : i_tot;
    if (voltage_ref)
        require(voltage_ref->sample_rate == i_tot.sample_rate, Err::BadConfig,
                "voltage reference must share the current's sample rate");
    auto crossings = detect_zero_crossings(ref, cfg.nominal_freq_hz, cfg.hysteresis_fraction,
                                           cfg.spacing_tolerance);
    return segment_cycles(i_tot, crossings, cfg.cycle_samples, dataset_id);
}

}  // namespace nilm
