#include "nilm/config.hpp"

#include <fstream>
#include <sstream>

namespace nilm {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), Err::BadFile, "cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_text(ss.str());
}

Config Config::parse_text(const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        require(eq != std::string::npos, Err::BadConfig, "config line missing '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), Err::BadConfig, "empty config key");
        cfg.values[key] = value;
    }
    return cfg;
}

std::string Config::get_str(const std::string& key) const {
    auto it = values.find(key);
    require(it != values.end(), Err::BadConfig, "missing config key: " + key);
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stod(it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stoi(it->second);
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stoull(it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(Err::BadConfig, "bad boolean for " + key + ": " + v);
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get_str(key));
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(std::stod(trim(field)));
    return out;
}

namespace {

LoadKind kind_from_string(const std::string& s) {
    if (s == "resistive") return LoadKind::resistive;
    if (s == "phase_controlled") return LoadKind::phase_controlled;
    if (s == "rectifier_cfl") return LoadKind::rectifier_cfl;
    if (s == "induction_motor") return LoadKind::induction_motor;
    fail(Err::BadConfig, "unknown load kind: " + s);
}

const char* kind_to_string(LoadKind k) {
    switch (k) {
        case LoadKind::resistive: return "resistive";
        case LoadKind::phase_controlled: return "phase_controlled";
        case LoadKind::rectifier_cfl: return "rectifier_cfl";
        case LoadKind::induction_motor: return "induction_motor";
    }
    return "resistive";
}

TransientEnvelope envelope_from_string(const std::string& s) {
    if (s == "none") return TransientEnvelope::none;
    if (s == "exponential_decay") return TransientEnvelope::exponential_decay;
    if (s == "inrush_spike") return TransientEnvelope::inrush_spike;
    fail(Err::BadConfig, "unknown transient envelope: " + s);
}

const char* envelope_to_string(TransientEnvelope e) {
    switch (e) {
        case TransientEnvelope::none: return "none";
        case TransientEnvelope::exponential_decay: return "exponential_decay";
        case TransientEnvelope::inrush_spike: return "inrush_spike";
    }
    return "none";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, sep)) out.push_back(trim(field));
    return out;
}

}  // namespace

std::vector<LoadSpec> load_palette(const std::string& path) {
    Config cfg = Config::load(path);
    int n_loads = cfg.get_int("n_loads", 0);
    require(n_loads >= 1, Err::BadConfig, "palette needs n_loads >= 1");
    std::vector<LoadSpec> specs;
    for (int i = 1; i <= n_loads; ++i) {
        std::string p = "load" + std::to_string(i) + ".";
        LoadSpec spec;
        spec.load_id = i;
        spec.name = cfg.get_str(p + "name", "load" + std::to_string(i));
        spec.kind = kind_from_string(cfg.get_str(p + "kind", "resistive"));
        spec.nominal_rms = cfg.get_double(p + "rms", 0.0);
        if (cfg.has(p + "levels")) spec.operating_levels = cfg.get_doubles(p + "levels");
        if (cfg.has(p + "harmonics")) {
            spec.harmonic_profile.clear();
            for (const auto& h : split(cfg.get_str(p + "harmonics"), ' ')) {
                auto parts = split(h, ':');
                require(parts.size() == 3, Err::BadConfig,
                        "harmonic format is order:magnitude:phase");
                spec.harmonic_profile.push_back(
                    {std::stoi(parts[0]), std::stod(parts[1]), std::stod(parts[2])});
            }
        } else {
            spec.harmonic_profile = {{1, 1.0, 0.0}};
        }
        if (cfg.has(p + "transient")) {
            auto parts = split(cfg.get_str(p + "transient"), ':');
            require(parts.size() == 2, Err::BadConfig, "transient format is envelope:cycles");
            spec.turn_on_transient.envelope = envelope_from_string(parts[0]);
            spec.turn_on_transient.duration_cycles = std::stoi(parts[1]);
        }
        if (cfg.has(p + "modulation")) {
            auto parts = split(cfg.get_str(p + "modulation"), ':');
            require(parts.size() == 2, Err::BadConfig, "modulation format is depth:rate_hz");
            spec.modulation.depth = std::stod(parts[0]);
            spec.modulation.rate_hz = std::stod(parts[1]);
        }
        spec.firing_angle = cfg.get_double(p + "firing_angle", M_PI / 2);
        spec.validate();
        specs.push_back(std::move(spec));
    }
    return specs;
}

void write_palette(const std::string& path, const std::vector<LoadSpec>& specs) {
    std::ofstream os(path);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os.precision(17);
    os << "n_loads = " << specs.size() << "\n";
    for (const auto& spec : specs) {
        std::string p = "load" + std::to_string(spec.load_id) + ".";
        os << p << "name = " << spec.name << "\n";
        os << p << "kind = " << kind_to_string(spec.kind) << "\n";
        os << p << "rms = " << spec.nominal_rms << "\n";
        os << p << "levels = ";
        for (size_t i = 0; i < spec.operating_levels.size(); ++i)
            os << (i ? "," : "") << spec.operating_levels[i];
        os << "\n";
        os << p << "harmonics = ";
        for (size_t i = 0; i < spec.harmonic_profile.size(); ++i) {
            const auto& h = spec.harmonic_profile[i];
            os << (i ? " " : "") << h.order << ':' << h.magnitude << ':' << h.phase;
        }
        os << "\n";
        os << p << "transient = " << envelope_to_string(spec.turn_on_transient.envelope) << ':'
           << spec.turn_on_transient.duration_cycles << "\n";
        os << p << "modulation = " << spec.modulation.depth << ':' << spec.modulation.rate_hz
           << "\n";
        if (spec.kind == LoadKind::phase_controlled)
            os << p << "firing_angle = " << spec.firing_angle << "\n";
    }
}

Schedule load_schedule(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), Err::BadFile, "cannot open schedule: " + path);
    Schedule sched;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (first && line.rfind("time_s", 0) == 0) {
            first = false;
            continue;  // header row
        }
        first = false;
        auto parts = split(line, ',');
        require(parts.size() == 3, Err::BadFile, "schedule rows are time_s,load_id,level");
        sched.events.push_back({std::stod(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])});
    }
    return sched;
}

void write_schedule(const std::string& path, const Schedule& schedule) {
    std::ofstream os(path);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os.precision(17);
    os << "time_s,load_id,level\n";
    for (const auto& e : schedule.events)
        os << e.time_s << ',' << e.load_id << ',' << e.level << "\n";
}

}  // namespace nilm
