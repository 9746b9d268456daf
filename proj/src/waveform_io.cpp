#include "nilm/waveform_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace nilm {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'W', 'F'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(bool(is), Err::BadFile, "truncated waveform file");
    return v;
}

}  // namespace

void write_waveform(const std::string& path, const Waveform& w) {
    w.validate();
    std::ofstream os(path, std::ios::binary);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, uint8_t(w.kind));
    put(os, w.sample_rate);
    put(os, uint64_t(w.samples.size()));
    os.write(reinterpret_cast<const char*>(w.samples.data()),
             std::streamsize(w.samples.size() * sizeof(double)));
    require(bool(os), Err::BadFile, "write failed: " + path);
}

Waveform read_waveform(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), Err::BadFile, "cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, kMagic, 4) == 0, Err::BadFile,
            "bad magic in " + path);
    uint32_t version = get<uint32_t>(is);
    require(version == kVersion, Err::BadFile, "unsupported waveform version");
    Waveform w;
    uint8_t kind = get<uint8_t>(is);
    require(kind <= 1, Err::BadFile, "bad signal kind");
    w.kind = SignalKind(kind);
    w.sample_rate = get<double>(is);
    uint64_t count = get<uint64_t>(is);
    w.samples.resize(count);
    is.read(reinterpret_cast<char*>(w.samples.data()), std::streamsize(count * sizeof(double)));
    require(bool(is), Err::BadFile, "truncated samples in " + path);
    w.validate();
    return w;
}

void write_waveform_csv(const std::string& path, const Waveform& w) {
    w.validate();
    std::ofstream os(path);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os.precision(17);
    os << "sample_rate=" << w.sample_rate
       << ",kind=" << (w.kind == SignalKind::voltage ? "voltage" : "current") << "\n";
    for (double v : w.samples) os << v << "\n";
    require(bool(os), Err::BadFile, "write failed: " + path);
}

Waveform read_waveform_csv(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), Err::BadFile, "cannot open: " + path);
    std::string header;
    require(bool(std::getline(is, header)), Err::BadFile, "missing CSV header in " + path);
    Waveform w;
    {
        std::stringstream ss(header);
        std::string field;
        bool have_rate = false, have_kind = false;
        while (std::getline(ss, field, ',')) {
            auto eq = field.find('=');
            require(eq != std::string::npos, Err::BadFile, "malformed CSV header field: " + field);
            std::string key = field.substr(0, eq);
            std::string value = field.substr(eq + 1);
            if (key == "sample_rate") {
                w.sample_rate = std::stod(value);
                have_rate = true;
            } else if (key == "kind") {
                require(value == "current" || value == "voltage", Err::BadFile,
                        "kind must be current or voltage");
                w.kind = value == "voltage" ? SignalKind::voltage : SignalKind::current;
                have_kind = true;
            } else {
                fail(Err::BadFile, "unknown CSV header key: " + key);
            }
        }
        require(have_rate && have_kind, Err::BadFile, "CSV header needs sample_rate and kind");
    }
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        w.samples.push_back(std::stod(line));
    }
    w.validate();
    return w;
}

}  // namespace nilm
