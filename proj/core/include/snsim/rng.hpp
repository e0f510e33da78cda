#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace snsim {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Philox4x32-10 block cipher core (counter-based random numbers).
/// Streams are addressed by (key, stream); draws within a stream are
/// addressed by a 64-bit block counter, so any draw is reachable without
/// sequencing through the others and results never depend on scheduling.
class Philox4x32 {
public:
    Philox4x32(std::uint64_t key, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(key),
               static_cast<std::uint32_t>(key >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::array<std::uint32_t, 4> block(std::uint64_t counter) const {
        std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(counter),
                                       static_cast<std::uint32_t>(counter >> 32),
                                       stream_lo_, stream_hi_};
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
                 static_cast<std::uint32_t>(p0)};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return c;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_, stream_hi_;
};

/// Sequential convenience wrapper over Philox: uniforms and Gaussian draws.
/// A (seed, tag, stream) triple fully determines the sequence.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::string_view tag, std::uint64_t stream = 0)
        : core_(seed ^ fnv1a64(tag), stream) {}

    std::uint64_t next_u64() {
        if (word_ == 0) {
            buf_ = core_.block(counter_++);
            word_ = 2;
            return (static_cast<std::uint64_t>(buf_[1]) << 32) | buf_[0];
        }
        word_ = 0;
        return (static_cast<std::uint64_t>(buf_[3]) << 32) | buf_[2];
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (spare value cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0,1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    Philox4x32 core_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int word_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Derives a child seed for a named purpose and index; used to hand each
/// Monte Carlo path / ensemble member its own independent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) {
    return Philox4x32(master ^ fnv1a64(tag), index).block(0)[0] |
           (static_cast<std::uint64_t>(
                Philox4x32(master ^ fnv1a64(tag), index).block(0)[1])
            << 32);
}

}  // namespace snsim
