#pragma once

#include <map>
#include <string>
#include <vector>

#include "nilm/simulate.hpp"

namespace nilm {

// Flat key = value text files; '#' starts a comment.
struct Config {
    std::map<std::string, std::string> values;

    static Config load(const std::string& path);
    static Config parse_text(const std::string& text);

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // comma separated
};

// Palette file: n_loads plus load<N>.* keys (kind, rms, levels, harmonics,
// transient, modulation, firing_angle).
std::vector<LoadSpec> load_palette(const std::string& path);
void write_palette(const std::string& path, const std::vector<LoadSpec>& specs);

// Schedule file: CSV rows time_s,load_id,level with level -1 meaning off.
Schedule load_schedule(const std::string& path);
void write_schedule(const std::string& path, const Schedule& schedule);

}  // namespace nilm
