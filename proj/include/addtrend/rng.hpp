#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace addtrend {

// Seedable random generator with fully specified output mappings, so that
// simulation draws are reproducible from the seed alone.  The raw stream is
// std::mt19937_64 (bit-exact across implementations); uniform doubles take
// the top 53 bits, normals use the Marsaglia polar method.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal, Marsaglia polar method (one spare value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::vector<double> normals(int n, double sd = 1.0) {
        std::vector<double> out(static_cast<std::size_t>(n));
        for (auto& z : out) z = sd * normal();
        return out;
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= lim);
        return x % n;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

    // Derives an independent stream seed (splitmix64 finalizer over
    // seed + golden-ratio increments).  Used for per-replication noise.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace addtrend
