#pragma once

#include <atomic>

#include "nilm/classify.hpp"
#include "nilm/regress.hpp"

namespace nilm {

// End-to-end hybrid predictor: features -> classifier bank -> per-load
// regressors fed with the predicted state bits.
struct HybridPredictor {
    ClassifierBank bank;
    RegressorBank regressors;
    WaveShapeConfig feature_cfg = WaveShapeConfig::defaults();
    double budget_s = 10.0 / 60.0;  // response deadline, 10 ac cycles

    void validate() const;
};

struct Prediction {
    std::vector<uint8_t> state;
    std::vector<double> rms;
};

// Features are extracted once per cycle. Loads predicted OFF keep the raw
// regressor output (clipped at zero) so the OFF tolerance stays a real
// measurement.
Prediction hybrid_predict(const HybridPredictor& p, const CycleObservation& cycle);
Prediction hybrid_predict_features(const HybridPredictor& p, std::span<const double> features);

// Streaming (cycle at a time) and batch paths share the per-cycle routine,
// so their outputs are bit-identical.
std::vector<Prediction> predict_stream(const HybridPredictor& p,
                                       const std::vector<CycleObservation>& cycles);
std::vector<Prediction> predict_batch(const HybridPredictor& p,
                                      const std::vector<CycleObservation>& cycles);

struct ClassificationReport {
    std::vector<double> per_load;
    double overall = 0.0;
    double exact_match = 0.0;  // all loads correct at once
    std::vector<std::array<uint64_t, 4>> confusion;  // per load: tn, fp, fn, tp
};

ClassificationReport evaluate_classification(const std::vector<std::vector<uint8_t>>& preds,
                                             const std::vector<std::vector<uint8_t>>& truth);

// Per-load accuracy under the +-10% (on) / +-0.2 A (off) rule.
std::vector<double> evaluate_regression(const std::vector<std::vector<double>>& pred_rms,
                                        const std::vector<std::vector<double>>& true_rms,
                                        const std::vector<std::vector<uint8_t>>& true_state,
                                        double on_tolerance = 0.10, double off_tolerance_a = 0.2);

struct StageStats {
    double mean_s = 0.0;
    double p99_s = 0.0;
};

struct LatencyReport {
    StageStats segmentation;  // per-cycle share of segmenting the trace
    StageStats features;
    StageStats classify;
    StageStats regress;
    StageStats total;
    size_t n_cycles = 0;
    double budget_s = 10.0 / 60.0;
    bool within_budget(double per_cycle_budget_s) const { return total.mean_s <= per_cycle_budget_s; }
};

// Wall-clock per-stage means and p99 over at least `min_cycles` cycles
// (the cycle list repeats if shorter). Reporting only; asserts nothing.
LatencyReport benchmark_latency(const HybridPredictor& p,
                                const std::vector<CycleObservation>& cycles, size_t min_cycles);

struct RunReport {
    std::string strategy;  // "split80" or "holdout"
    uint64_t seed = 0;
    int holdout_id = -1;
    size_t train_rows = 0;
    size_t test_rows = 0;
    std::vector<double> class_per_load;
    double class_overall = 0.0;
    double exact_match = 0.0;
    std::vector<std::array<uint64_t, 4>> confusion;
    std::vector<double> reg_truth_per_load;
    std::vector<double> reg_hybrid_per_load;
    double reg_truth_overall = 0.0;
    double reg_hybrid_overall = 0.0;
    double train_seconds = 0.0;
};

struct ExperimentConfig {
    ForestParams forest;
    RegressorTrainConfig regressor;
    size_t classifier_max_rows = 0;  // 0 = all rows
    double split_ratio = 0.8;
    bool train_regressors = true;
    uint64_t seed = 7;
};

enum class Strategy { split80, holdout_each };

RunReport run_split80(const std::vector<LabeledObservation>& rows, const ExperimentConfig& cfg,
                      uint64_t seed);
RunReport run_holdout(const std::vector<LabeledObservation>& rows, const ExperimentConfig& cfg,
                      int holdout_id);

// split80: one run per seed (cfg.seed + run index); holdout_each: one run
// per dataset id present in the rows.
std::vector<RunReport> run_experiment(const std::vector<LabeledObservation>& rows,
                                      Strategy strategy, size_t n_runs,
                                      const ExperimentConfig& cfg);

void write_run_json(const std::string& path, const RunReport& report);
void write_aggregate_csv(const std::string& path, const std::vector<RunReport>& reports);

double median_of(std::vector<double> values);
double quantile_of(std::vector<double> values, double q);

}  // namespace nilm
