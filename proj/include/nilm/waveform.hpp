#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nilm/common.hpp"

namespace nilm {

enum class SignalKind : uint8_t { current = 0, voltage = 1 };

// Uniformly sampled instantaneous current or voltage trace.
struct Waveform {
    std::vector<double> samples;
    double sample_rate = 0.0;  // samples / second
    SignalKind kind = SignalKind::current;

    size_t size() const { return samples.size(); }
    double duration_s() const { return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0; }
    void validate() const;
};

// One 60-Hz cycle of aggregate current, resampled to a fixed length.
// The first sample sits at the (interpolated) positive-going zero crossing
// of the reference signal.
struct CycleObservation {
    std::vector<double> samples;  // exactly cycle_samples long
    double start_index = 0.0;     // fractional position in the source waveform
    int source_dataset_id = 0;
    int64_t observation_id = 0;
};

struct SegmentationConfig {
    double nominal_freq_hz = 60.0;
    size_t cycle_samples = 3334;       // ceil(200000 / 60); keeps the level-8 detail band at 25 taps
    double hysteresis_fraction = 0.02; // of the trace's max |value|
    double spacing_tolerance = 0.25;   // accepted deviation from the nominal crossing spacing
};

// Positive-going zero crossings of `ref`, linearly interpolated to sub-sample
// precision. Detection runs on a zero-phase moving-average copy of the trace
// so that broadband noise does not scatter the crossing estimates; a
// hysteresis band rejects chatter and a minimum-spacing rule drops crossings
// closer than (1 - tolerance) nominal periods apart.
std::vector<double> detect_zero_crossings(const Waveform& ref, double nominal_freq_hz,
                                          double hysteresis_fraction = 0.02,
                                          double spacing_tolerance = 0.25);

// One CycleObservation per consecutive crossing pair; each raw span is
// resampled to exactly cycle_samples points by linear interpolation. The
// partial trailing cycle is discarded.
std::vector<CycleObservation> segment_cycles(const Waveform& i_tot,
                                             const std::vector<double>& crossings,
                                             size_t cycle_samples, int dataset_id = 0);

// Convenience wrapper: crossings come from the voltage reference when one is
// provided (cleaner zeros), otherwise from the current itself.
std::vector<CycleObservation> segment_waveform(const Waveform& i_tot, const Waveform* voltage_ref,
                                               const SegmentationConfig& cfg, int dataset_id = 0);

// Linear interpolation at a fractional index, clamped at the ends.
double interp_at(std::span<const double> samples, double index);

// Resamples [begin, end) of src to `count` evenly spaced points.
std::vector<double> resample_span(std::span<const double> src, double begin, double end,
                                  size_t count);

}  // namespace nilm
