#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace xgbvar {

// Philox 4x32-10 counter-based generator. Streams are cheap: any
// (key, counter-prefix) pair is an independent sequence, which gives
// reproducible per-(n, replicate) substreams under concurrency.
class Philox {
  public:
    Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream),
                   static_cast<std::uint32_t>(stream >> 32)} {}

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            const std::uint64_t p2 = 0xCD9E8D57ull * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi2 = static_cast<std::uint32_t>(p2 >> 32);
            const std::uint32_t lo2 = static_cast<std::uint32_t>(p2);
            ctr = {hi2 ^ ctr[1] ^ key[0], lo2, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

    std::uint32_t next_u32() {
        if (buffer_pos_ == 4) {
            buffer_ = block(counter_, key_);
            buffer_pos_ = 0;
            if (++counter_[0] == 0) ++counter_[1];
        }
        return buffer_[buffer_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller on the counter stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    int buffer_pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace xgbvar
