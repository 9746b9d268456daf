#pragma once

#include "nilm/dataset.hpp"
#include "nilm/mlp.hpp"
#include "nilm/yeojohnson.hpp"

namespace nilm {

// One per-load regressor: Yeo-Johnson input transform (state bits pass
// through), a three-hidden-layer network, standardized output.
struct Regressor {
    MlpModel model;
    InputTransform transform;
    OutputScaler scaler;
};

// Predicted RMS in amperes, clipped at zero. The input is the feature
// vector with the N_L state bits appended.
double predict_rms(const Regressor& reg, std::span<const double> features_with_state);

struct RegressorBank {
    std::vector<Regressor> per_load;
    uint64_t schema_hash = 0;

    size_t n_loads() const { return per_load.size(); }
    std::vector<double> predict(std::span<const double> features,
                                std::span<const uint8_t> state) const;

    void save(const std::string& dir) const;
    static RegressorBank load(const std::string& dir);
};

struct RegressorTrainConfig {
    MlpConfig mlp;
    size_t max_rows = 0;  // 0 = use every row; otherwise a seeded subsample
};

// One regressor per load, trained with ground-truth state bits appended to
// the features (teacher forcing). Which state source feeds them at
// evaluation time is the caller's wiring choice.
RegressorBank train_regressor_bank(const std::vector<LabeledObservation>& train,
                                   const RegressorTrainConfig& cfg, uint64_t seed);

// features-plus-state input row for one observation.
std::vector<double> regression_input(std::span<const double> features,
                                     std::span<const uint8_t> state);

}  // namespace nilm
