#include "nilm/classify.hpp"

#include <filesystem>
#include <fstream>

namespace nilm {

std::vector<uint8_t> ClassifierBank::predict_state(std::span<const double> x) const {
    std::vector<uint8_t> q(models.size());
    for (size_t i = 0; i < models.size(); ++i) q[i] = uint8_t(models[i].predict(x).first);
    return q;
}

size_t ClassifierBank::serialized_size() const {
    size_t bytes = 0;
    for (const auto& m : models) bytes += m.serialized_size();
    return bytes;
}

void ClassifierBank::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir + "/bank.manifest");
    require(bool(manifest), Err::BadFile, "cannot write bank manifest");
    manifest << "n_loads = " << models.size() << "\n";
    manifest << "schema_hash = " << schema_hash << "\n";
    for (size_t i = 0; i < models.size(); ++i) {
        std::string name = "cl2_" + std::to_string(i + 1) + ".forest";
        manifest << "model_" << (i + 1) << " = " << name << "\n";
        models[i].save(dir + "/" + name);
    }
}

ClassifierBank ClassifierBank::load(const std::string& dir) {
    std::ifstream manifest(dir + "/bank.manifest");
    require(bool(manifest), Err::BadFile, "cannot open bank manifest in " + dir);
    ClassifierBank bank;
    size_t n_loads = 0;
    std::string line;
    std::vector<std::string> names;
    while (std::getline(manifest, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, line.find(' '));
        std::string value = line.substr(eq + 1);
        value.erase(0, value.find_first_not_of(' '));
        if (key == "n_loads")
            n_loads = std::stoul(value);
        else if (key == "schema_hash")
            bank.schema_hash = std::stoull(value);
        else if (key.rfind("model_", 0) == 0)
            names.push_back(value);
    }
    require(n_loads > 0 && names.size() == n_loads, Err::BadFile, "malformed bank manifest");
    for (const auto& name : names) bank.models.push_back(ForestModel::load(dir + "/" + name));
    return bank;
}

uint32_t encode_powerset(std::span<const uint8_t> q) {
    require(q.size() >= 1 && q.size() <= 16, Err::OutOfRange, "supported N_L is 1..16");
    uint32_t label = 0;
    for (size_t i = 0; i < q.size(); ++i) {
        require(q[i] <= 1, Err::OutOfRange, "state bits must be 0 or 1");
        label |= uint32_t(q[i]) << (q.size() - 1 - i);
    }
    return label;
}

std::vector<uint8_t> decode_powerset(uint32_t label, size_t n_loads) {
    require(n_loads >= 1 && n_loads <= 16, Err::OutOfRange, "supported N_L is 1..16");
    require(label < (uint32_t(1) << n_loads), Err::OutOfRange, "label out of range");
    std::vector<uint8_t> q(n_loads);
    for (size_t i = 0; i < n_loads; ++i) q[i] = uint8_t((label >> (n_loads - 1 - i)) & 1u);
    return q;
}

DataMatrix feature_matrix(const std::vector<LabeledObservation>& rows) {
    require(!rows.empty(), Err::EmptyData, "no rows");
    DataMatrix X;
    X.rows = rows.size();
    X.cols = rows.front().features.size();
    X.values.resize(X.rows * X.cols);
    for (size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].features.size() == X.cols, Err::DimMismatch,
                "inconsistent feature dimensions");
        std::copy(rows[r].features.begin(), rows[r].features.end(),
                  X.values.begin() + long(r * X.cols));
    }
    return X;
}

ClassifierBank train_binary_bank(const std::vector<LabeledObservation>& train,
                                 const ForestParams& params, uint64_t seed) {
    require(!train.empty(), Err::EmptyData, "empty training set");
    const size_t n_loads = train.front().state.size();
    DataMatrix X = feature_matrix(train);
    ClassifierBank bank;
    bank.models.resize(n_loads);
    // Models are independent: model i sees only label column q_i and its
    // own seed stream, so dropping load j's labels can only change model j.
    for (size_t li = 0; li < n_loads; ++li) {
        std::vector<uint16_t> y(train.size());
        for (size_t r = 0; r < train.size(); ++r) y[r] = train[r].state[li];
        bank.models[li] = train_forest(X, y, 2, params, derive_seed(seed, 51, li));
    }
    return bank;
}

ForestModel train_powerset(const std::vector<LabeledObservation>& train,
                           const ForestParams& params, uint64_t seed) {
    require(!train.empty(), Err::EmptyData, "empty training set");
    const size_t n_loads = train.front().state.size();
    DataMatrix X = feature_matrix(train);
    std::vector<uint16_t> y(train.size());
    for (size_t r = 0; r < train.size(); ++r)
        y[r] = uint16_t(encode_powerset(train[r].state));
    return train_forest(X, y, uint16_t(1u << n_loads), params, derive_seed(seed, 52));
}

namespace {

double bank_overall_accuracy(const ClassifierBank& bank,
                             const std::vector<LabeledObservation>& test) {
    if (test.empty()) return 0.0;
    size_t correct = 0, total = 0;
    for (const auto& row : test) {
        auto q = bank.predict_state(row.features);
        for (size_t i = 0; i < q.size(); ++i) {
            correct += q[i] == row.state[i];
            ++total;
        }
    }
    return double(correct) / double(total);
}

}  // namespace

ForestParams grid_search_cv(const std::vector<std::vector<LabeledObservation>>& datasets,
                            const std::vector<ForestParams>& grid, uint64_t seed) {
    require(!grid.empty(), Err::EmptyGrid, "empty hyperparameter grid");
    require(datasets.size() >= 2, Err::BadConfig, "cross validation needs >= 2 data sets");

    double best_score = -1.0;
    size_t best_index = 0;
    for (size_t g = 0; g < grid.size(); ++g) {
        double score_sum = 0.0;
        for (size_t fold = 0; fold < datasets.size(); ++fold) {
            std::vector<LabeledObservation> train;
            for (size_t k = 0; k < datasets.size(); ++k) {
                if (k == fold) continue;
                train.insert(train.end(), datasets[k].begin(), datasets[k].end());
            }
            auto bank = train_binary_bank(train, grid[g], derive_seed(seed, 53, fold));
            score_sum += bank_overall_accuracy(bank, datasets[fold]);
        }
        double score = score_sum / double(datasets.size());
        const ForestParams& cand = grid[g];
        const ForestParams& incumbent = grid[best_index];
        bool better = score > best_score;
        if (score == best_score) {
            if (cand.n_trees != incumbent.n_trees)
                better = cand.n_trees < incumbent.n_trees;
            else if (cand.max_depth != incumbent.max_depth)
                better = cand.max_depth < incumbent.max_depth;
        }
        if (better) {
            best_score = score;
            best_index = g;
        }
    }
    return grid[best_index];
}

}  // namespace nilm
