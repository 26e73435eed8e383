#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace fcomp {

/// Mixes a 64-bit state and advances it (splitmix64). Used only for seed
/// derivation, never as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Purpose tags for substream derivation. Every consumer of randomness gets
/// its own (purpose, index) substream of the master seed so that results are
/// independent of evaluation order and parallelism degree.
enum class StreamPurpose : std::uint64_t {
    Lottery = 1,  // competition lotteries (events ascending, then tie-break)
    Trial = 2,    // Monte Carlo trials, indexed by trial number
    AuditMc = 3,  // Monte Carlo fallback inside incentive audits
    TestGen = 4,  // random-instance generation in tests
};

/// Deterministic random stream. All sampling goes through the methods below
/// (never std::uniform_real_distribution and friends, whose output is not
/// pinned down by the standard), so a seed reproduces bit-identical results
/// on any platform.
///
/// Consumption order contract for competition mechanisms: one draw per event
/// in ascending event order, then at most one draw for the final tie-break
/// (or one Fisher-Yates shuffle per tie group for rankings).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Derives the substream for (master, purpose, index).
    static Rng substream(std::uint64_t master, StreamPurpose purpose, std::uint64_t index) {
        std::uint64_t s = master;
        std::uint64_t a = splitmix64(s);
        s ^= static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL;
        std::uint64_t b = splitmix64(s);
        s ^= index * 0xd1342543de82ef95ULL;
        std::uint64_t c = splitmix64(s);
        return Rng(a ^ (b + 0x165667b19e3779f9ULL) ^ c);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform index in [0, k), unbiased via rejection.
    std::size_t uniform_index(std::size_t k) {
        if (k == 0) throw std::invalid_argument("uniform_index: k must be positive");
        if (k == 1) return 0;
        const std::uint64_t bound = UINT64_MAX - UINT64_MAX % k;
        std::uint64_t v = next_u64();
        while (v >= bound) v = next_u64();
        return static_cast<std::size_t>(v % k);
    }

    bool bernoulli(double p) { return next_unit() < p; }

    /// Samples an index from a probability vector by inverse CDF walk.
    /// Probabilities are assumed nonnegative; they need not sum exactly to 1
    /// (the last positive entry absorbs rounding slack).
    std::size_t sample(std::span<const double> probs) {
        if (probs.empty()) throw std::invalid_argument("sample: empty distribution");
        const double u = next_unit();
        double acc = 0.0;
        std::size_t last_positive = 0;
        bool any_positive = false;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) {
                last_positive = i;
                any_positive = true;
            }
            acc += probs[i];
            if (u < acc) return i;
        }
        if (!any_positive) throw std::invalid_argument("sample: all-zero distribution");
        return last_positive;
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace fcomp
