#pragma once

#include "nilm/dataset.hpp"
#include "nilm/forest.hpp"

namespace nilm {

// Classifier 2: one binary forest per load; the state vector is the
// concatenation of the per-model predictions.
struct ClassifierBank {
    std::vector<ForestModel> models;
    uint64_t schema_hash = 0;

    size_t n_loads() const { return models.size(); }
    std::vector<uint8_t> predict_state(std::span<const double> x) const;
    size_t serialized_size() const;

    // One model file per load plus a text manifest naming them and the
    // feature schema hash.
    void save(const std::string& dir) const;
    static ClassifierBank load(const std::string& dir);
};

// Binary label encoding used by the power-set baseline (Classifier 1):
// label = sum_i q_i * 2^(N_L - i), i = 1..N_L, so q_1 is the most
// significant bit.
uint32_t encode_powerset(std::span<const uint8_t> q);
std::vector<uint8_t> decode_powerset(uint32_t label, size_t n_loads);

DataMatrix feature_matrix(const std::vector<LabeledObservation>& rows);

ClassifierBank train_binary_bank(const std::vector<LabeledObservation>& train,
                                 const ForestParams& params, uint64_t seed);

ForestModel train_powerset(const std::vector<LabeledObservation>& train,
                           const ForestParams& params, uint64_t seed);

// Leave-one-dataset-out cross validation over a hyperparameter grid.
// Scores each grid point by mean overall bank accuracy across the folds;
// ties prefer fewer trees, then smaller depth.
ForestParams grid_search_cv(const std::vector<std::vector<LabeledObservation>>& datasets,
                            const std::vector<ForestParams>& grid, uint64_t seed);

}  // namespace nilm
