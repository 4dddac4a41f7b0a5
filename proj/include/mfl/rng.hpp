#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Stateless: the same (key, counter) always yields the same block, so any
/// draw can be reproduced from its integer coordinates alone.
class Philox {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t key, Block ctr) noexcept {
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream tags keep draws for different purposes disjoint under one seed.
enum class Stream : std::uint32_t {
    init = 1,
    noise = 2,
    data = 3,
    probe = 4,
    projection = 5,
};

/// Keyed draws. Coordinates (a, b, c, d) identify one variate; d packs the
/// stream tag in its upper 8 bits.
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform in (0, 1).
    double uniform(Stream s, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d = 0) const noexcept {
        const auto blk = block(s, a, b, c, d);
        return to_open_unit(blk[0], blk[1]);
    }

    /// Standard normal via Box-Muller on the first two 53-bit uniforms of the block.
    double normal(Stream s, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d = 0) const noexcept {
        const auto blk = block(s, a, b, c, d);
        const double u1 = to_open_unit(blk[0], blk[1]);
        const double u2 = to_open_unit(blk[2], blk[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    Philox::Block block(Stream s, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) const noexcept {
        const std::uint32_t tagged = (static_cast<std::uint32_t>(s) << 24) ^ (d & 0x00FFFFFFu);
        return Philox::generate(seed_, {a, b, c, tagged});
    }

    static double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_;
};

}  // namespace mfl
