#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mmv {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Pure function of (counter, key): any (path, step) pair addresses its own
 * block of randomness, so Monte Carlo output is independent of thread
 * scheduling by construction.
 */
struct Philox4x32 {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round != 0) {
                key[0] += W0;
                key[1] += W1;
            }
            const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
            ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                   std::uint32_t(p1),
                   std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                   std::uint32_t(p0)};
        }
        return ctr;
    }
};

/// Uniform in (0, 1), never hitting either endpoint.
inline double uniform_from_bits(std::uint64_t bits) {
    return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Source of standard normal draws addressed by (path, step).
class NormalSource {
public:
    virtual ~NormalSource() = default;
    virtual void fill(std::uint64_t path, std::uint64_t step, std::span<double> out) const = 0;
};

/**
 * Philox-backed normals: counter = (path lo, path hi, step, block), key =
 * split seed. Each Philox block yields two 53-bit uniforms, turned into two
 * normals by Box-Muller.
 */
class PhiloxNormalSource final : public NormalSource {
public:
    explicit PhiloxNormalSource(std::uint64_t seed) : seed_(seed) {}

    void fill(std::uint64_t path, std::uint64_t step, std::span<double> out) const override {
        const std::array<std::uint32_t, 2> key = {std::uint32_t(seed_),
                                                  std::uint32_t(seed_ >> 32)};
        std::size_t i = 0;
        for (std::uint32_t blk = 0; i < out.size(); ++blk) {
            const auto r = Philox4x32::block({std::uint32_t(path), std::uint32_t(path >> 32),
                                              std::uint32_t(step), blk},
                                             key);
            const std::uint64_t u0 = (std::uint64_t(r[0]) << 32) | r[1];
            const std::uint64_t u1 = (std::uint64_t(r[2]) << 32) | r[3];
            const double radius = std::sqrt(-2.0 * std::log(uniform_from_bits(u0)));
            const double angle = 2.0 * std::numbers::pi * uniform_from_bits(u1);
            out[i++] = radius * std::cos(angle);
            if (i < out.size()) out[i++] = radius * std::sin(angle);
        }
    }

private:
    std::uint64_t seed_;
};

/// Sequential convenience stream over the same Philox core; used by
/// sampling-based checks and instance generators.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          stream_(stream) {}

    std::uint64_t next_u64() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const auto r = Philox4x32::block({std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
                                          std::uint32_t(stream_), std::uint32_t(stream_ >> 32)},
                                         key_);
        ++counter_;
        spare_ = (std::uint64_t(r[2]) << 32) | r[3];
        have_ = true;
        return (std::uint64_t(r[0]) << 32) | r[1];
    }

    double uniform() { return uniform_from_bits(next_u64()); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_normal_ = radius * std::sin(angle);
        have_normal_ = true;
        return radius * std::cos(angle);
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_ = 0;
    bool have_ = false;
    double spare_normal_ = 0.0;
    bool have_normal_ = false;
};

}  // namespace mmv
