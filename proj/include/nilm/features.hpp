#pragma once

#include <array>
#include <atomic>
#include <span>
#include <string>
#include <vector>

#include "nilm/dwt.hpp"
#include "nilm/waveform.hpp"

namespace nilm {

// Bumped on every extract_features call; lets tests pin down how many
// extractions a pipeline stage performed.
std::atomic<uint64_t>& feature_extraction_counter();

// Harmonic orders used throughout: fundamental plus odd harmonics to 13.
inline constexpr std::array<int, 7> kHarmonicOrders = {1, 3, 5, 7, 9, 11, 13};
inline constexpr size_t kWaveletCoeffFirst = 12;  // level-8 detail band, 0-based
inline constexpr size_t kWaveletCoeffCount = 12;  // coefficients 12..23

// Wave-shape ratio points are phases (fraction of a cycle). They are
// palette calibration constants: each pair straddles an off-peak local
// maximum of some load's signature.
struct WaveShapeConfig {
    struct RatioPoint {
        double phase_a = 0.0;
        double phase_b = 0.0;
    };
    std::vector<RatioPoint> ratio_points;
    double epsilon = 0.01;  // amperes, denominator guard

    void validate() const;
    static WaveShapeConfig defaults();
    size_t ratio_count() const { return ratio_points.size(); }
};

// Flat feature vector in the documented order:
//   [rms | h1..h13 unscaled (7) | h1n..h13n normalized (7) | w12..w23 (12)
//    | r1..rK | midmax]
// Total dimension 1 + 14 + 12 + K + 1.
struct FeatureLayout {
    size_t ratio_count = 0;
    size_t dimension() const { return 1 + 14 + kWaveletCoeffCount + ratio_count + 1; }
    static std::vector<std::string> names(size_t ratio_count);
    static std::string header(size_t ratio_count);  // comma-joined names
    static uint64_t schema_hash(size_t ratio_count);
};

double cycle_rms(std::span<const double> samples);

// Magnitude of the Fourier coefficient at bin k = order (one cycle per
// observation, so order == bin), scaled 2/N: a unit-amplitude sinusoid at
// that order reads 1.0. Evaluated per bin with Goertzel recursions.
std::array<double, 7> harmonic_magnitudes(std::span<const double> cycle);

// v / ||v||_2, or the zero vector when ||v||_2 == 0.
std::array<double, 7> normalize_l2(const std::array<double, 7>& v);

// Level-8 db7 detail coefficients 12..23 (symmetric extension).
std::array<double, 12> dwt_db7_level8(std::span<const double> cycle);

// K ratio features plus the max over the middle third of the positive half
// cycle, [N/6, N/3).
std::vector<double> wave_shape_features(std::span<const double> cycle,
                                        const WaveShapeConfig& cfg);

std::vector<double> extract_features(std::span<const double> cycle, const WaveShapeConfig& cfg);

inline std::vector<double> extract_features(const CycleObservation& obs,
                                            const WaveShapeConfig& cfg) {
    return extract_features(std::span<const double>(obs.samples), cfg);
}

}  // namespace nilm
