#pragma once
// Shared plumbing: deterministic RNG streams, normal-distribution math,
// fixed-point cycle arithmetic, error types.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aexns {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto distinct exit codes.
// ---------------------------------------------------------------------------
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Fixed-point cycle clock. Instruction costs compose exactly: all costs are
// multiples of 1/20 cycle (0.05), so a 0.25-cycle nop accumulates drift-free.
// ---------------------------------------------------------------------------
using Ticks = std::int64_t;
inline constexpr Ticks kTicksPerCycle = 20;

inline Ticks cycles_to_ticks(double cycles) {
    double scaled = cycles * static_cast<double>(kTicksPerCycle);
    double rounded = std::nearbyint(scaled);
    if (std::abs(scaled - rounded) > 1e-6) {
        throw ConfigError("cycle cost " + std::to_string(cycles) +
                          " is not a multiple of 0.05 cycles");
    }
    return static_cast<Ticks>(rounded);
}

inline double ticks_to_cycles(Ticks t) {
    return static_cast<double>(t) / static_cast<double>(kTicksPerCycle);
}

// Event times (interrupt arrivals) round to the nearest tick; only configured
// costs must sit exactly on the grid.
inline Ticks time_to_ticks(double cycles) {
    return static_cast<Ticks>(std::llround(cycles * static_cast<double>(kTicksPerCycle)));
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit. Stable across platforms; used for profile hashes and for
// deriving per-purpose RNG streams from a run seed.
// ---------------------------------------------------------------------------
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Normal distribution helpers. Sampling goes through the inverse CDF so that
// streams are reproducible independent of libstdc++'s distribution internals.
// ---------------------------------------------------------------------------
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Acklam's rational approximation refined with one Halley step; accurate to
// better than 1e-12 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step against the exact CDF.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. A root seed fans out into named substreams so that
// experiment stages can be reordered without perturbing each other.
// ---------------------------------------------------------------------------
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform in (0,1), never exactly 0 or 1.
    double uniform01() {
        return (static_cast<double>(u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive bounds; rejection sampling avoids modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(u64());
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t v;
        do {
            v = u64();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % range);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal(double mean, double stddev) {
        return mean + stddev * normal_quantile(uniform01());
    }

    Rng substream(std::string_view name) const {
        return Rng(splitmix64(seed_ ^ fnv1a64(name)));
    }

    Rng substream(std::uint64_t id) const {
        return Rng(splitmix64(seed_ ^ (id * 0x9e3779b97f4a7c15ULL + 1)));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace aexns
