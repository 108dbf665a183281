#include "gwfract/rng.hpp"
#include "gwfract/error.hpp"

namespace gwf {

std::uint64_t hash_word(const Word& w) noexcept {
    std::uint64_t h = mix64(0x6a09e667f3bcc909ULL ^ w.size());
    for (Letter l : w) h = mix64(h ^ (static_cast<std::uint64_t>(l) + 0x3c6ef372fe94f82bULL));
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
    // FNV-1a over the label, then mixed with the parent seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(seed ^ mix64(h));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::ResourceLimit: return "resource-limit";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Capability: return "capability-error";
        case ErrorKind::DegenerateSample: return "degenerate-sample";
    }
    return "error";
}

}  // namespace gwf
