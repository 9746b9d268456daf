#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nilm/features.hpp"
#include "nilm/simulate.hpp"

namespace nilm {

// One labeled training row. `state` is the per-load on/off vector q,
// `per_load_rms` the regression targets. Synthetic rows produced by
// expansion keep the index of the source observation in origin_id.
struct LabeledObservation {
    std::vector<double> features;
    std::vector<uint8_t> state;
    std::vector<double> per_load_rms;
    int64_t origin_id = 0;
    int dataset_id = 0;
    bool synthetic = false;
};

// Time-aligned per-load cycles for one source observation.
struct ObservationGroup {
    std::vector<std::vector<double>> per_load_cycles;  // N_L x N_c
    int dataset_id = 0;
    int64_t origin_id = 0;
};

// Level detection: q_i = 1 iff the load's cycle RMS exceeds its threshold.
std::pair<std::vector<uint8_t>, std::vector<double>> label_observation(
    const std::vector<std::vector<double>>& per_load_cycles,
    const std::vector<double>& thresholds);

// Superposition expansion: every subset of the active loads becomes one
// observation (2^{N_active} rows, including the empty and the full
// combination). All rows share the source's origin_id; the full combination
// is the original observation and is flagged non-synthetic.
std::vector<LabeledObservation> expand_synthetic(const ObservationGroup& group,
                                                 const std::vector<double>& thresholds,
                                                 const WaveShapeConfig& feature_cfg);

// Sorts observations lexicographically by feature vector, then drops each
// row whose L1 feature distance to the previously kept row is within
// `threshold_fraction` of the kept row's L1 norm. Returns the kept rows in
// sorted order.
std::vector<LabeledObservation> reduce_dataset(std::vector<LabeledObservation> data,
                                               double threshold_fraction = 0.05);

// 80/20 shuffled split with all rows sharing a (dataset_id, origin_id)
// group assigned to the same side.
std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> split_strategy1(
    const std::vector<LabeledObservation>& data, double ratio, uint64_t seed);

// Leave-one-dataset-out partition.
std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> split_strategy2(
    const std::vector<LabeledObservation>& data, int holdout_id);

struct DatasetBuildConfig {
    std::vector<double> thresholds;  // per load, amperes
    WaveShapeConfig feature_cfg = WaveShapeConfig::defaults();
    SegmentationConfig segmentation;
    double reduction_threshold = 0.05;
    bool expand = true;
    bool reduce = true;
    size_t observation_stride = 1;  // keep every k-th source observation
};

struct BuiltDataset {
    // Reduced synthetic corpus, the training data.
    std::vector<LabeledObservation> rows;
    // Features of the real aggregate cycles with schedule-derived truth,
    // used for end-to-end pipeline evaluation (never expanded or reduced).
    std::vector<LabeledObservation> aggregate_rows;
    size_t source_count = 0;
    size_t expanded_count = 0;  // row count before reduction
};

// Segments one scenario (voltage-referenced), labels and expands every
// source observation, reduces within the data set.
BuiltDataset build_dataset(const ScenarioCorpus& corpus, const DatasetBuildConfig& cfg);

// All seven scenarios, reduction applied per data set; rows are
// concatenated in dataset order.
BuiltDataset build_corpus_dataset(const std::vector<ScenarioCorpus>& corpora,
                                  const DatasetBuildConfig& cfg);

// features.csv (header per FeatureLayout) and labels.csv
// (origin_id,dataset_id,q_1..q_N,rms_1..rms_N).
void write_dataset_csv(const std::string& features_path, const std::string& labels_path,
                       const std::vector<LabeledObservation>& rows, size_t ratio_count);
std::vector<LabeledObservation> read_dataset_csv(const std::string& features_path,
                                                 const std::string& labels_path);

}  // namespace nilm
