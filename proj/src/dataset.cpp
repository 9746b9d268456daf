#include "nilm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nilm {

std::pair<std::vector<uint8_t>, std::vector<double>> label_observation(
    const std::vector<std::vector<double>>& per_load_cycles,
    const std::vector<double>& thresholds) {
    require(per_load_cycles.size() == thresholds.size(), Err::LengthMismatch,
            "one threshold per load required");
    std::vector<uint8_t> state(per_load_cycles.size());
    std::vector<double> rms(per_load_cycles.size());
    for (size_t i = 0; i < per_load_cycles.size(); ++i) {
        rms[i] = cycle_rms(per_load_cycles[i]);
        state[i] = rms[i] > thresholds[i] ? 1 : 0;
    }
    return {std::move(state), std::move(rms)};
}

std::vector<LabeledObservation> expand_synthetic(const ObservationGroup& group,
                                                 const std::vector<double>& thresholds,
                                                 const WaveShapeConfig& feature_cfg) {
    const size_t n_loads = group.per_load_cycles.size();
    require(n_loads == thresholds.size(), Err::LengthMismatch, "one threshold per load required");
    require(n_loads > 0, Err::EmptyData, "observation group has no loads");
    const size_t n_c = group.per_load_cycles.front().size();
    for (const auto& c : group.per_load_cycles)
        require(c.size() == n_c, Err::LengthMismatch, "per-load cycles must be time-aligned");

    std::vector<size_t> active;
    std::vector<double> rms(n_loads, 0.0);
    for (size_t i = 0; i < n_loads; ++i) {
        rms[i] = cycle_rms(group.per_load_cycles[i]);
        if (rms[i] > thresholds[i]) active.push_back(i);
    }

    const size_t n_subsets = size_t(1) << active.size();
    const size_t full_mask = n_subsets - 1;
    std::vector<LabeledObservation> out;
    out.reserve(n_subsets);
    std::vector<double> composite(n_c);
    for (size_t mask = 0; mask < n_subsets; ++mask) {
        std::fill(composite.begin(), composite.end(), 0.0);
        LabeledObservation obs;
        obs.state.assign(n_loads, 0);
        obs.per_load_rms.assign(n_loads, 0.0);
        for (size_t j = 0; j < active.size(); ++j) {
            if (!(mask & (size_t(1) << j))) continue;
            size_t li = active[j];
            obs.state[li] = 1;
            obs.per_load_rms[li] = rms[li];
            const auto& cyc = group.per_load_cycles[li];
            for (size_t s = 0; s < n_c; ++s) composite[s] += cyc[s];
        }
        obs.features = extract_features(std::span<const double>(composite), feature_cfg);
        obs.origin_id = group.origin_id;
        obs.dataset_id = group.dataset_id;
        obs.synthetic = mask != full_mask;
        out.push_back(std::move(obs));
    }
    return out;
}

namespace {

bool feature_less(const LabeledObservation& a, const LabeledObservation& b) {
    if (a.features != b.features)
        return std::lexicographical_compare(a.features.begin(), a.features.end(),
                                            b.features.begin(), b.features.end());
    if (a.dataset_id != b.dataset_id) return a.dataset_id < b.dataset_id;
    if (a.origin_id != b.origin_id) return a.origin_id < b.origin_id;
    return a.state < b.state;
}

double l1_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += std::fabs(x);
    return acc;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

}  // namespace

std::vector<LabeledObservation> reduce_dataset(std::vector<LabeledObservation> data,
                                               double threshold_fraction) {
    if (data.empty()) return data;
    std::sort(data.begin(), data.end(), feature_less);
    std::vector<LabeledObservation> kept;
    kept.reserve(data.size());
    kept.push_back(std::move(data.front()));
    for (size_t i = 1; i < data.size(); ++i) {
        const auto& last = kept.back();
        double dist = l1_distance(data[i].features, last.features);
        if (dist <= threshold_fraction * l1_norm(last.features)) continue;
        kept.push_back(std::move(data[i]));
    }
    return kept;
}

std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> split_strategy1(
    const std::vector<LabeledObservation>& data, double ratio, uint64_t seed) {
    require(ratio > 0.0 && ratio < 1.0, Err::BadConfig, "split ratio must lie in (0, 1)");
    // Group rows by (dataset_id, origin_id): synthetic siblings are
    // near-duplicates, so they must land on the same side of the split.
    std::vector<std::pair<int64_t, int64_t>> keys;
    keys.reserve(data.size());
    for (const auto& r : data) keys.emplace_back(r.dataset_id, r.origin_id);
    std::vector<std::pair<int64_t, int64_t>> groups = keys;
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());

    Rng rng(derive_seed(seed, 41));
    std::vector<size_t> order(groups.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    size_t n_train = size_t(std::llround(ratio * double(groups.size())));
    n_train = std::min(n_train, groups.size());

    std::vector<uint8_t> in_train_by_group(groups.size(), 0);
    for (size_t i = 0; i < n_train; ++i) in_train_by_group[order[i]] = 1;

    std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> out;
    for (size_t i = 0; i < data.size(); ++i) {
        auto it = std::lower_bound(groups.begin(), groups.end(), keys[i]);
        size_t gi = size_t(it - groups.begin());
        if (in_train_by_group[gi])
            out.first.push_back(data[i]);
        else
            out.second.push_back(data[i]);
    }
    return out;
}

std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> split_strategy2(
    const std::vector<LabeledObservation>& data, int holdout_id) {
    bool found = false;
    for (const auto& r : data)
        if (r.dataset_id == holdout_id) {
            found = true;
            break;
        }
    require(found, Err::BadId, "holdout dataset_id not present");
    std::pair<std::vector<LabeledObservation>, std::vector<LabeledObservation>> out;
    for (const auto& r : data) {
        if (r.dataset_id == holdout_id)
            out.second.push_back(r);
        else
            out.first.push_back(r);
    }
    return out;
}

BuiltDataset build_dataset(const ScenarioCorpus& corpus, const DatasetBuildConfig& cfg) {
    require(!cfg.thresholds.empty(), Err::BadConfig, "thresholds required");
    require(cfg.thresholds.size() == corpus.per_load.size(), Err::LengthMismatch,
            "one threshold per load required");

    auto crossings = detect_zero_crossings(corpus.voltage, cfg.segmentation.nominal_freq_hz,
                                           cfg.segmentation.hysteresis_fraction,
                                           cfg.segmentation.spacing_tolerance);
    auto agg_cycles =
        segment_cycles(corpus.i_tot, crossings, cfg.segmentation.cycle_samples, corpus.dataset_id);
    std::vector<std::vector<CycleObservation>> load_cycles(corpus.per_load.size());
    for (size_t li = 0; li < corpus.per_load.size(); ++li)
        load_cycles[li] = segment_cycles(corpus.per_load[li], crossings,
                                         cfg.segmentation.cycle_samples, corpus.dataset_id);

    const size_t n_cycles = agg_cycles.size();
    const size_t stride = std::max<size_t>(1, cfg.observation_stride);

    BuiltDataset built;
    built.source_count = (n_cycles + stride - 1) / stride;

    // Aggregate rows carry the schedule-derived truth for pipeline tests.
    built.aggregate_rows.resize(n_cycles);
    parallel_for(n_cycles, [&](size_t c) {
        LabeledObservation row;
        row.features = extract_features(agg_cycles[c], cfg.feature_cfg);
        if (c < corpus.ground_truth.size()) {
            row.state = corpus.ground_truth[c].q;
            row.per_load_rms = corpus.ground_truth[c].rms;
        } else {
            row.state.assign(corpus.per_load.size(), 0);
            row.per_load_rms.assign(corpus.per_load.size(), 0.0);
        }
        row.origin_id = int64_t(c);
        row.dataset_id = corpus.dataset_id;
        built.aggregate_rows[c] = std::move(row);
    });

    std::vector<std::vector<LabeledObservation>> expanded(built.source_count);
    if (cfg.expand) {
        parallel_for(built.source_count, [&](size_t gi) {
            size_t c = gi * stride;
            ObservationGroup group;
            group.per_load_cycles.reserve(load_cycles.size());
            for (const auto& lc : load_cycles) group.per_load_cycles.push_back(lc[c].samples);
            group.dataset_id = corpus.dataset_id;
            group.origin_id = int64_t(c);
            expanded[gi] = expand_synthetic(group, cfg.thresholds, cfg.feature_cfg);
        });
    } else {
        for (size_t gi = 0; gi < built.source_count; ++gi)
            expanded[gi].push_back(built.aggregate_rows[gi * stride]);
    }

    std::vector<LabeledObservation> rows;
    for (auto& group : expanded)
        for (auto& r : group) rows.push_back(std::move(r));
    built.expanded_count = rows.size();
    built.rows = cfg.reduce ? reduce_dataset(std::move(rows), cfg.reduction_threshold)
                            : std::move(rows);
    return built;
}

BuiltDataset build_corpus_dataset(const std::vector<ScenarioCorpus>& corpora,
                                  const DatasetBuildConfig& cfg) {
    BuiltDataset all;
    for (const auto& corpus : corpora) {
        BuiltDataset one = build_dataset(corpus, cfg);
        all.source_count += one.source_count;
        all.expanded_count += one.expanded_count;
        for (auto& r : one.rows) all.rows.push_back(std::move(r));
        for (auto& r : one.aggregate_rows) all.aggregate_rows.push_back(std::move(r));
    }
    return all;
}

void write_dataset_csv(const std::string& features_path, const std::string& labels_path,
                       const std::vector<LabeledObservation>& rows, size_t ratio_count) {
    std::ofstream fs(features_path);
    require(bool(fs), Err::BadFile, "cannot open for write: " + features_path);
    fs.precision(17);
    fs << FeatureLayout::header(ratio_count) << "\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.features.size(); ++i) {
            if (i) fs << ',';
            fs << r.features[i];
        }
        fs << "\n";
    }
    std::ofstream ls(labels_path);
    require(bool(ls), Err::BadFile, "cannot open for write: " + labels_path);
    ls.precision(17);
    size_t n_loads = rows.empty() ? 0 : rows.front().state.size();
    ls << "origin_id,dataset_id";
    for (size_t i = 1; i <= n_loads; ++i) ls << ",q_" << i;
    for (size_t i = 1; i <= n_loads; ++i) ls << ",rms_" << i;
    ls << "\n";
    for (const auto& r : rows) {
        ls << r.origin_id << ',' << r.dataset_id;
        for (auto q : r.state) ls << ',' << int(q);
        for (auto v : r.per_load_rms) ls << ',' << v;
        ls << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

std::vector<LabeledObservation> read_dataset_csv(const std::string& features_path,
                                                 const std::string& labels_path) {
    std::ifstream fs(features_path);
    require(bool(fs), Err::BadFile, "cannot open: " + features_path);
    std::ifstream ls(labels_path);
    require(bool(ls), Err::BadFile, "cannot open: " + labels_path);
    std::string fline, lline;
    require(bool(std::getline(fs, fline)), Err::BadFile, "missing features header");
    require(bool(std::getline(ls, lline)), Err::BadFile, "missing labels header");
    size_t n_loads = 0;
    for (const auto& col : split_csv_line(lline))
        if (col.rfind("q_", 0) == 0) ++n_loads;

    std::vector<LabeledObservation> rows;
    while (std::getline(fs, fline)) {
        if (fline.empty()) continue;
        require(bool(std::getline(ls, lline)), Err::BadFile,
                "labels file shorter than features file");
        LabeledObservation r;
        for (const auto& f : split_csv_line(fline)) r.features.push_back(std::stod(f));
        auto lf = split_csv_line(lline);
        require(lf.size() == 2 + 2 * n_loads, Err::BadFile, "bad labels row width");
        r.origin_id = std::stoll(lf[0]);
        r.dataset_id = std::stoi(lf[1]);
        for (size_t i = 0; i < n_loads; ++i) r.state.push_back(uint8_t(std::stoi(lf[2 + i])));
        for (size_t i = 0; i < n_loads; ++i)
            r.per_load_rms.push_back(std::stod(lf[2 + n_loads + i]));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace nilm
