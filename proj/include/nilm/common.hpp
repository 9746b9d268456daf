#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nilm {

enum class Err {
    TooShort,
    AllZero,
    LengthMismatch,
    BadLevel,
    ScheduleOutOfRange,
    EmptyData,
    DimMismatch,
    OutOfRange,
    BadId,
    EmptyGrid,
    DegenerateColumn,
    NonFiniteLoss,
    CycleTooShort,
    BadFile,
    BadConfig,
};

const char* err_name(Err code);

class NilmError : public std::runtime_error {
public:
    NilmError(Err code, const std::string& what)
        : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
    throw NilmError(code, what);
}

inline void require(bool cond, Err code, const std::string& what) {
    if (!cond) fail(code, what);
}

// splitmix64, used to derive independent stream seeds from a master seed.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic seed derivation: the same (master, stream, index) triple
// always yields the same seed, independent of thread scheduling.
inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0) {
    uint64_t s = master ^ (0x510e527fade682d1ULL + stream * 0x9e3779b97f4a7c15ULL);
    uint64_t a = splitmix64(s);
    s ^= index * 0x2545f4914f6cdd1dULL + 0x6a09e667f3bcc908ULL;
    uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

// xoshiro256++ with explicit Box-Muller for normals. We roll our own so
// that results are reproducible across standard library implementations
// (std::normal_distribution is not portable bit-for-bit).
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_spare_ = false;
        spare_ = 0.0;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // unbiased integer in [0, bound)
    uint64_t below(uint64_t bound) {
        if (bound == 0) return 0;
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    size_t index(size_t n) { return size_t(below(n)); }

    // standard normal, Box-Muller with caching
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    bool have_spare_;
    double spare_;
};

// Runs fn(i) for i in [0, n) on a small worker pool. Work items must be
// independent; anything seeded must derive its seed from the item index so
// results do not depend on scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned n_threads = 0);

// FNV-1a, used for feature schema hashes in model manifests.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace nilm
