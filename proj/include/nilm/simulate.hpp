#pragma once

#include <string>
#include <vector>

#include "nilm/waveform.hpp"

namespace nilm {

enum class LoadKind { resistive, phase_controlled, rectifier_cfl, induction_motor };
enum class TransientEnvelope { none, exponential_decay, inrush_spike };

struct HarmonicComponent {
    int order = 1;        // odd, <= 13
    double magnitude = 1; // relative to the fundamental (order 1 has magnitude 1)
    double phase = 0.0;   // radians
};

struct TurnOnTransient {
    int duration_cycles = 0;
    TransientEnvelope envelope = TransientEnvelope::none;
};

// Slow physical variation of the load's draw (compressor torque pulsation,
// drum tumble, thermal drift). Depth is a relative RMS wobble; the phase is
// drawn per scenario.
struct AmplitudeModulation {
    double depth = 0.0;
    double rate_hz = 0.0;
};

struct LoadSpec {
    int load_id = 0;  // 1..N_L
    std::string name;
    LoadKind kind = LoadKind::resistive;
    double nominal_rms = 0.0;  // amperes
    std::vector<HarmonicComponent> harmonic_profile;
    TurnOnTransient turn_on_transient;
    std::vector<double> operating_levels{1.0};  // RMS multipliers
    double firing_angle = M_PI / 2;             // phase_controlled conduction delay, radians
    AmplitudeModulation modulation;

    void validate() const;
};

// level == -1 means off, otherwise an operating-level index.
struct ScheduleEvent {
    double time_s = 0.0;
    int load_id = 0;
    int level = -1;
};

struct Schedule {
    std::vector<ScheduleEvent> events;  // time-ordered
    void validate(const std::vector<LoadSpec>& specs, double duration_s) const;
};

struct CycleGroundTruth {
    std::vector<uint8_t> q;    // per-load on/off for the cycle (majority rule)
    std::vector<double> rms;   // per-load RMS over the cycle, amperes
};

struct ScenarioCorpus {
    Waveform i_tot;
    std::vector<Waveform> per_load;
    Waveform voltage;
    std::vector<CycleGroundTruth> ground_truth;  // one row per complete cycle
    int dataset_id = 0;
};

struct ScenarioOptions {
    double nominal_freq_hz = 60.0;
    double voltage_rms = 120.0;
    double voltage_noise_rms = 0.15;  // volts
    double amplitude_scale = 1.0;     // per-scenario supply drift multiplier
    int dataset_id = 0;
};

// Steady-state periodic signature for one operating level. RMS equals
// nominal_rms * operating_levels[level].
Waveform make_load_signature(const LoadSpec& spec, size_t level, double phase_offset,
                             int n_cycles, double sample_rate = 200000.0,
                             double nominal_freq_hz = 60.0);

// Pointwise sum; inputs must agree in length and sample rate.
Waveform superimpose(const std::vector<Waveform>& currents);

// Full scenario: per-load currents follow the schedule (turn-on transients
// applied at off->on events), sensor noise is split evenly across the load
// channels so that i_tot stays the exact superposition of the per-load
// traces while carrying aggregate Gaussian noise of RMS `noise_rms`.
ScenarioCorpus synthesize_scenario(const std::vector<LoadSpec>& specs, const Schedule& schedule,
                                   double duration_s, double sample_rate, double noise_rms,
                                   uint64_t seed, const ScenarioOptions& options = {});

// The default eight-load palette: heater, oven/range, refrigerator, CFL
// bank, water heater, dryer, window AC, central AC condenser. Asking for
// fewer loads yields the nested prefix.
std::vector<LoadSpec> default_palette(size_t n_loads = 8);

// Default per-load on/off thresholds, amperes.
std::vector<double> default_thresholds(size_t n_loads);

struct CorpusConfig {
    size_t n_loads = 8;
    double duration_s = 10.0;
    double sample_rate = 200000.0;
    double nominal_freq_hz = 60.0;
    double noise_fraction = 0.005;  // of the palette's full-scale RMS
    uint64_t seed = 7;
};

// Schedule for one of the seven scenario regimes (1..7), mirroring the
// testbed conditions: 1-2 everything on with perturbations, 3-4 half fixed
// half random, 5-7 all loads random.
Schedule scenario_schedule(int scenario, const std::vector<LoadSpec>& specs, double duration_s,
                           uint64_t seed);

// Seven seeded scenarios with per-scenario supply drift and modulation
// phases, the simulated stand-in for the seven lab data sets.
std::vector<ScenarioCorpus> build_default_corpus(const CorpusConfig& cfg);

}  // namespace nilm
