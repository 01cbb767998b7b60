#pragma once
// Deterministic RNG helpers. std::mt19937_64 is fully specified by the
// standard, but the <random> distributions are not, so every sampling
// primitive used by the pipeline lives here and is byte-reproducible.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace urir {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Stream ids keep seeded sub-generators independent per purpose, so e.g.
// adding an epoch does not shift the negative-sampling stream.
enum class Stream : uint64_t {
    Init = 1,
    Split = 2,
    ValHoldout = 3,
    Negatives = 4,
    RippleItem = 5,
    RippleNode = 6,
    EpochShuffle = 7,
    ValCandidates = 8,
    EvalCandidates = 9,
    History = 10,
    Synth = 11,
};

inline uint64_t sub_seed(uint64_t seed, Stream stream, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = splitmix64(seed ^ (0xA24BAED4963EE407ull * static_cast<uint64_t>(stream)));
    h = splitmix64(h ^ (0x9FB21C651E98DF25ull * (a + 1)));
    h = splitmix64(h ^ (0xD6E8FEB86659FD93ull * (b + 1)));
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform in [0, n). Lemire reduction; bias is O(n / 2^64).
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
    }

    double real01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) {
            std::swap(xs[i - 1], xs[static_cast<size_t>(below(i))]);
        }
    }

    // k distinct indices from [0, n), in draw order. Requires k <= n.
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), size_t{0});
        for (size_t i = 0; i < k; ++i) {
            size_t j = i + static_cast<size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

    // k indices from [0, n), duplicates allowed.
    std::vector<size_t> sample_with_replacement(size_t n, size_t k) {
        std::vector<size_t> idx(k);
        for (size_t i = 0; i < k; ++i) idx[i] = static_cast<size_t>(below(n));
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace urir
