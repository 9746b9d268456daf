#include "nilm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace nilm {

void HybridPredictor::validate() const {
    require(!bank.models.empty(), Err::BadConfig, "hybrid predictor has no classifiers");
    require(bank.models.size() == regressors.n_loads(), Err::DimMismatch,
            "classifier and regressor bank sizes differ");
    require(bank.schema_hash == regressors.schema_hash, Err::BadConfig,
            "feature schema hash mismatch between banks");
}

Prediction hybrid_predict_features(const HybridPredictor& p, std::span<const double> features) {
    Prediction out;
    out.state = p.bank.predict_state(features);
    out.rms = p.regressors.predict(features, out.state);
    return out;
}

Prediction hybrid_predict(const HybridPredictor& p, const CycleObservation& cycle) {
    auto features = extract_features(cycle, p.feature_cfg);
    return hybrid_predict_features(p, features);
}

std::vector<Prediction> predict_stream(const HybridPredictor& p,
                                       const std::vector<CycleObservation>& cycles) {
    std::vector<Prediction> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(hybrid_predict(p, c));
    return out;
}

std::vector<Prediction> predict_batch(const HybridPredictor& p,
                                      const std::vector<CycleObservation>& cycles) {
    // Batch mode parallelizes over cycles but runs the exact same per-cycle
    // routine, so output order and values match the stream path.
    std::vector<Prediction> out(cycles.size());
    parallel_for(cycles.size(), [&](size_t i) { out[i] = hybrid_predict(p, cycles[i]); });
    return out;
}

ClassificationReport evaluate_classification(const std::vector<std::vector<uint8_t>>& preds,
                                             const std::vector<std::vector<uint8_t>>& truth) {
    require(preds.size() == truth.size(), Err::LengthMismatch,
            "prediction/truth row counts differ");
    require(!preds.empty(), Err::EmptyData, "nothing to evaluate");
    const size_t n_loads = truth.front().size();
    ClassificationReport report;
    report.per_load.assign(n_loads, 0.0);
    report.confusion.assign(n_loads, {0, 0, 0, 0});
    size_t exact = 0;
    for (size_t r = 0; r < preds.size(); ++r) {
        require(preds[r].size() == n_loads && truth[r].size() == n_loads, Err::LengthMismatch,
                "row width mismatch");
        bool all_ok = true;
        for (size_t i = 0; i < n_loads; ++i) {
            bool ok = preds[r][i] == truth[r][i];
            report.per_load[i] += ok;
            all_ok = all_ok && ok;
            size_t cell = size_t(truth[r][i]) * 2 + size_t(preds[r][i]);  // tn,fp,fn,tp
            ++report.confusion[i][cell];
        }
        exact += all_ok;
    }
    double overall = 0.0;
    for (auto& acc : report.per_load) {
        acc /= double(preds.size());
        overall += acc;
    }
    report.overall = overall / double(n_loads);
    report.exact_match = double(exact) / double(preds.size());
    return report;
}

std::vector<double> evaluate_regression(const std::vector<std::vector<double>>& pred_rms,
                                        const std::vector<std::vector<double>>& true_rms,
                                        const std::vector<std::vector<uint8_t>>& true_state,
                                        double on_tolerance, double off_tolerance_a) {
    require(pred_rms.size() == true_rms.size() && pred_rms.size() == true_state.size(),
            Err::LengthMismatch, "regression evaluation row counts differ");
    require(!pred_rms.empty(), Err::EmptyData, "nothing to evaluate");
    const size_t n_loads = true_state.front().size();
    std::vector<double> per_load(n_loads, 0.0);
    for (size_t r = 0; r < pred_rms.size(); ++r) {
        for (size_t i = 0; i < n_loads; ++i) {
            bool ok;
            if (true_state[r][i]) {
                ok = std::fabs(pred_rms[r][i] - true_rms[r][i]) <= on_tolerance * true_rms[r][i];
            } else {
                ok = std::fabs(pred_rms[r][i]) <= off_tolerance_a;
            }
            per_load[i] += ok;
        }
    }
    for (auto& acc : per_load) acc /= double(pred_rms.size());
    return per_load;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

StageStats stats_of(std::vector<double>& samples) {
    StageStats s;
    if (samples.empty()) return s;
    double sum = 0.0;
    for (double v : samples) sum += v;
    s.mean_s = sum / double(samples.size());
    std::sort(samples.begin(), samples.end());
    size_t i = size_t(std::ceil(0.99 * double(samples.size())));
    s.p99_s = samples[std::min(samples.size() - 1, i == 0 ? 0 : i - 1)];
    return s;
}

}  // namespace

LatencyReport benchmark_latency(const HybridPredictor& p,
                                const std::vector<CycleObservation>& cycles, size_t min_cycles) {
    require(!cycles.empty(), Err::EmptyData, "no cycles to benchmark");
    LatencyReport report;
    report.budget_s = p.budget_s;
    size_t n = std::max(min_cycles, size_t(1));

    std::vector<double> t_features, t_classify, t_regress, t_total;
    t_features.reserve(n);
    t_classify.reserve(n);
    t_regress.reserve(n);
    t_total.reserve(n);

    for (size_t i = 0; i < n; ++i) {
        const auto& cycle = cycles[i % cycles.size()];
        auto t0 = Clock::now();
        auto features = extract_features(cycle, p.feature_cfg);
        auto t1 = Clock::now();
        auto state = p.bank.predict_state(features);
        auto t2 = Clock::now();
        auto rms = p.regressors.predict(features, state);
        auto t3 = Clock::now();
        (void)rms;
        t_features.push_back(std::chrono::duration<double>(t1 - t0).count());
        t_classify.push_back(std::chrono::duration<double>(t2 - t1).count());
        t_regress.push_back(std::chrono::duration<double>(t3 - t2).count());
        t_total.push_back(std::chrono::duration<double>(t3 - t0).count());
    }

    report.n_cycles = n;
    report.features = stats_of(t_features);
    report.classify = stats_of(t_classify);
    report.regress = stats_of(t_regress);
    report.total = stats_of(t_total);
    return report;
}

namespace {

struct EvalRows {
    std::vector<std::vector<uint8_t>> pred_state;
    std::vector<std::vector<uint8_t>> true_state;
    std::vector<std::vector<double>> true_rms;
    std::vector<std::vector<double>> hybrid_rms;
    std::vector<std::vector<double>> truth_wired_rms;
};

RunReport run_single(const std::vector<LabeledObservation>& train_in,
                     const std::vector<LabeledObservation>& test,
                     const ExperimentConfig& cfg, uint64_t seed) {
    require(!train_in.empty() && !test.empty(), Err::EmptyData, "empty split");

    // Optional training-row cap for the classifier (seeded subsample).
    std::vector<LabeledObservation> capped;
    const std::vector<LabeledObservation>* train = &train_in;
    if (cfg.classifier_max_rows > 0 && cfg.classifier_max_rows < train_in.size()) {
        std::vector<uint32_t> idx(train_in.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = uint32_t(i);
        Rng rng(derive_seed(seed, 81));
        rng.shuffle(idx);
        idx.resize(cfg.classifier_max_rows);
        capped.reserve(idx.size());
        for (uint32_t i : idx) capped.push_back(train_in[i]);
        train = &capped;
    }

    RunReport report;
    report.seed = seed;
    report.train_rows = train->size();
    report.test_rows = test.size();

    auto t0 = Clock::now();
    ClassifierBank bank = train_binary_bank(*train, cfg.forest, seed);

    RegressorBank regressors;
    if (cfg.train_regressors)
        regressors = train_regressor_bank(train_in, cfg.regressor, seed);
    report.train_seconds = seconds_since(t0);

    const size_t n_loads = test.front().state.size();
    EvalRows rows;
    rows.pred_state.resize(test.size());
    rows.true_state.resize(test.size());
    rows.true_rms.resize(test.size());
    if (cfg.train_regressors) {
        rows.hybrid_rms.resize(test.size());
        rows.truth_wired_rms.resize(test.size());
    }
    parallel_for(test.size(), [&](size_t r) {
        const auto& obs = test[r];
        rows.pred_state[r] = bank.predict_state(obs.features);
        rows.true_state[r] = obs.state;
        rows.true_rms[r] = obs.per_load_rms;
        if (cfg.train_regressors) {
            rows.hybrid_rms[r] = regressors.predict(obs.features, rows.pred_state[r]);
            rows.truth_wired_rms[r] = regressors.predict(obs.features, obs.state);
        }
    });

    auto cls = evaluate_classification(rows.pred_state, rows.true_state);
    report.class_per_load = cls.per_load;
    report.class_overall = cls.overall;
    report.exact_match = cls.exact_match;
    report.confusion = cls.confusion;

    if (cfg.train_regressors) {
        report.reg_hybrid_per_load =
            evaluate_regression(rows.hybrid_rms, rows.true_rms, rows.true_state);
        report.reg_truth_per_load =
            evaluate_regression(rows.truth_wired_rms, rows.true_rms, rows.true_state);
        double h = 0.0, t = 0.0;
        for (size_t i = 0; i < n_loads; ++i) {
            h += report.reg_hybrid_per_load[i];
            t += report.reg_truth_per_load[i];
        }
        report.reg_hybrid_overall = h / double(n_loads);
        report.reg_truth_overall = t / double(n_loads);
    }
    return report;
}

}  // namespace

RunReport run_split80(const std::vector<LabeledObservation>& rows, const ExperimentConfig& cfg,
                      uint64_t seed) {
    auto [train, test] = split_strategy1(rows, cfg.split_ratio, seed);
    RunReport report = run_single(train, test, cfg, seed);
    report.strategy = "split80";
    return report;
}

RunReport run_holdout(const std::vector<LabeledObservation>& rows, const ExperimentConfig& cfg,
                      int holdout_id) {
    auto [train, test] = split_strategy2(rows, holdout_id);
    RunReport report = run_single(train, test, cfg, derive_seed(cfg.seed, 82, uint64_t(holdout_id)));
    report.strategy = "holdout";
    report.holdout_id = holdout_id;
    return report;
}

std::vector<RunReport> run_experiment(const std::vector<LabeledObservation>& rows,
                                      Strategy strategy, size_t n_runs,
                                      const ExperimentConfig& cfg) {
    std::vector<RunReport> reports;
    if (strategy == Strategy::split80) {
        for (size_t i = 0; i < n_runs; ++i)
            reports.push_back(run_split80(rows, cfg, cfg.seed + i));
        return reports;
    }
    std::vector<int> ids;
    for (const auto& r : rows)
        if (std::find(ids.begin(), ids.end(), r.dataset_id) == ids.end())
            ids.push_back(r.dataset_id);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) reports.push_back(run_holdout(rows, cfg, id));
    return reports;
}

double median_of(std::vector<double> values) { return quantile_of(std::move(values), 0.5); }

double quantile_of(std::vector<double> values, double q) {
    require(!values.empty(), Err::EmptyData, "quantile of empty set");
    std::sort(values.begin(), values.end());
    double pos = q * double(values.size() - 1);
    size_t lo = size_t(pos);
    size_t hi = std::min(values.size() - 1, lo + 1);
    double frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

void write_run_json(const std::string& path, const RunReport& r) {
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["seed"] = r.seed;
    if (r.holdout_id >= 0) j["holdout_id"] = r.holdout_id;
    j["train_rows"] = r.train_rows;
    j["test_rows"] = r.test_rows;
    j["classification"] = {
        {"per_load", r.class_per_load},
        {"overall", r.class_overall},
        {"exact_match", r.exact_match},
    };
    nlohmann::json conf = nlohmann::json::array();
    for (const auto& c : r.confusion)
        conf.push_back({{"tn", c[0]}, {"fp", c[1]}, {"fn", c[2]}, {"tp", c[3]}});
    j["classification"]["confusion"] = conf;
    if (!r.reg_hybrid_per_load.empty()) {
        j["regression"] = {
            {"truth_per_load", r.reg_truth_per_load},
            {"hybrid_per_load", r.reg_hybrid_per_load},
            {"truth_overall", r.reg_truth_overall},
            {"hybrid_overall", r.reg_hybrid_overall},
        };
    }
    j["train_seconds"] = r.train_seconds;
    std::ofstream os(path);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os << j.dump(2) << "\n";
}

void write_aggregate_csv(const std::string& path, const std::vector<RunReport>& reports) {
    require(!reports.empty(), Err::EmptyData, "no reports to aggregate");
    std::ofstream os(path);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os << "strategy,run,seed,holdout,class_overall,exact_match,reg_truth_overall,"
          "reg_hybrid_overall\n";
    for (size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        os << r.strategy << ',' << i << ',' << r.seed << ',' << r.holdout_id << ','
           << r.class_overall << ',' << r.exact_match << ',' << r.reg_truth_overall << ','
           << r.reg_hybrid_overall << "\n";
    }
    std::vector<double> overall, truth, hybrid;
    for (const auto& r : reports) {
        overall.push_back(r.class_overall);
        truth.push_back(r.reg_truth_overall);
        hybrid.push_back(r.reg_hybrid_overall);
    }
    os << "median,,,," << median_of(overall) << ",," << median_of(truth) << ','
       << median_of(hybrid) << "\n";
    os << "q1,,,," << quantile_of(overall, 0.25) << ",," << quantile_of(truth, 0.25) << ','
       << quantile_of(hybrid, 0.25) << "\n";
    os << "q3,,,," << quantile_of(overall, 0.75) << ",," << quantile_of(truth, 0.75) << ','
       << quantile_of(hybrid, 0.75) << "\n";
}

}  // namespace nilm
