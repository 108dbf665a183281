#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gwf {

using Letter = std::uint32_t;
using Word = std::vector<Letter>;

// SplitMix64 finalizer. Used both as the counter-based generator and for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based SplitMix64 stream: the n-th draw is mix64(key + n * gamma).
// A stream is fully described by its key, so any node of a random tree can
// regenerate its draws without touching the rest of the tree.
class Stream {
public:
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next_u64() % n; }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t hash_word(const Word& w) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Stream owned by a word of a random tree sampled with `seed`.
inline Stream node_stream(std::uint64_t seed, const Word& w) noexcept {
    return Stream(mix64(seed ^ hash_word(w)));
}

struct WordHash {
    std::size_t operator()(const Word& w) const noexcept { return static_cast<std::size_t>(hash_word(w)); }
};

// Deterministic Fisher-Yates shuffle driven by a stream.
template <class T>
void shuffle(std::vector<T>& v, Stream& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace gwf
