#include "nilm/regress.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace nilm {

std::vector<double> regression_input(std::span<const double> features,
                                     std::span<const uint8_t> state) {
    std::vector<double> x;
    x.reserve(features.size() + state.size());
    x.insert(x.end(), features.begin(), features.end());
    for (uint8_t q : state) x.push_back(double(q));
    return x;
}

double predict_rms(const Regressor& reg, std::span<const double> features_with_state) {
    thread_local std::vector<double> padded;
    padded.resize(reg.transform.padded_dim);
    reg.transform.apply_into(features_with_state, padded);
    double raw = reg.model.forward_scalar(padded, reg.transform.live_dim());
    double amps = reg.scaler.unscale(raw);
    return amps < 0.0 ? 0.0 : amps;
}

std::vector<double> RegressorBank::predict(std::span<const double> features,
                                           std::span<const uint8_t> state) const {
    auto x = regression_input(features, state);
    std::vector<double> out(per_load.size());
    for (size_t i = 0; i < per_load.size(); ++i) out[i] = predict_rms(per_load[i], x);
    return out;
}

RegressorBank train_regressor_bank(const std::vector<LabeledObservation>& train,
                                   const RegressorTrainConfig& cfg, uint64_t seed) {
    require(!train.empty(), Err::EmptyData, "empty training set");
    const size_t n_loads = train.front().state.size();

    // Seeded subsample shared by the whole bank.
    std::vector<uint32_t> rows(train.size());
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = uint32_t(i);
    if (cfg.max_rows > 0 && cfg.max_rows < rows.size()) {
        Rng rng(derive_seed(seed, 71));
        rng.shuffle(rows);
        rows.resize(cfg.max_rows);
    }

    std::vector<std::vector<double>> inputs(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto& obs = train[rows[r]];
        inputs[r] = regression_input(obs.features, obs.state);
    }

    // The input transform sees the same rows regardless of load; fit it
    // once and share.
    InputTransform shared_transform;
    shared_transform.fit(inputs, cfg.mlp.layer_sizes.front());

    RegressorBank bank;
    bank.per_load.resize(n_loads);
    parallel_for(n_loads, [&](size_t li) {
        Regressor& reg = bank.per_load[li];
        reg.transform = shared_transform;

        std::vector<double> targets(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) targets[r] = train[rows[r]].per_load_rms[li];
        try {
            reg.scaler.fit(targets);
        } catch (const NilmError&) {
            // constant target column: pin the mean, keep unit scale
            reg.scaler.mean = targets.empty() ? 0.0 : targets.front();
            reg.scaler.std = 1.0;
        }

        DataMatrix X;
        X.rows = rows.size();
        X.cols = cfg.mlp.layer_sizes.front();
        X.values.resize(X.rows * X.cols);
        for (size_t r = 0; r < rows.size(); ++r)
            reg.transform.apply_into(inputs[r],
                                     std::span<double>(X.values.data() + r * X.cols, X.cols));
        std::vector<double> y(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) y[r] = reg.scaler.scale(targets[r]);

        auto result = train_mlp(X, y, cfg.mlp, derive_seed(seed, 72, li));
        reg.model = std::move(result.model);
    });
    return bank;
}

namespace {

constexpr char kRegMagic[4] = {'N', 'L', 'R', 'G'};
constexpr uint32_t kRegVersion = 1;

}  // namespace

void RegressorBank::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir + "/regressors.manifest");
    require(bool(manifest), Err::BadFile, "cannot write regressor manifest");
    manifest << "n_loads = " << per_load.size() << "\n";
    manifest << "schema_hash = " << schema_hash << "\n";
    for (size_t i = 0; i < per_load.size(); ++i) {
        std::string name = "reg_" + std::to_string(i + 1) + ".mlp";
        manifest << "model_" << (i + 1) << " = " << name << "\n";
        std::ofstream os(dir + "/" + name, std::ios::binary);
        require(bool(os), Err::BadFile, "cannot write regressor model");
        os.write(kRegMagic, 4);
        os.write(reinterpret_cast<const char*>(&kRegVersion), sizeof(kRegVersion));
        per_load[i].transform.save(os);
        os.write(reinterpret_cast<const char*>(&per_load[i].scaler.mean), sizeof(double));
        os.write(reinterpret_cast<const char*>(&per_load[i].scaler.std), sizeof(double));
        per_load[i].model.save(os);
        require(bool(os), Err::BadFile, "regressor write failed");
    }
}

RegressorBank RegressorBank::load(const std::string& dir) {
    std::ifstream manifest(dir + "/regressors.manifest");
    require(bool(manifest), Err::BadFile, "cannot open regressor manifest in " + dir);
    RegressorBank bank;
    size_t n_loads = 0;
    std::vector<std::string> names;
    std::string line;
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
    require(n_loads > 0 && names.size() == n_loads, Err::BadFile,
            "malformed regressor manifest");
    for (const auto& name : names) {
        std::ifstream is(dir + "/" + name, std::ios::binary);
        require(bool(is), Err::BadFile, "cannot open regressor model " + name);
        char magic[4];
        is.read(magic, 4);
        uint32_t version = 0;
        is.read(reinterpret_cast<char*>(&version), sizeof(version));
        require(bool(is) && std::equal(magic, magic + 4, kRegMagic) && version == kRegVersion,
                Err::BadFile, "bad regressor file " + name);
        Regressor reg;
        reg.transform = InputTransform::load(is);
        is.read(reinterpret_cast<char*>(&reg.scaler.mean), sizeof(double));
        is.read(reinterpret_cast<char*>(&reg.scaler.std), sizeof(double));
        reg.model = MlpModel::load(is);
        bank.per_load.push_back(std::move(reg));
    }
    return bank;
}

}  // namespace nilm
