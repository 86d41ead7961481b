#pragma once

#include <cstdint>
#include <cmath>

namespace slelab {

// splitmix64, the standard 64-bit finalizer/stream generator
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives the key for sample i of a campaign seeded with `seed`.
// Sample streams are independent of thread scheduling, so parallel and
// serial campaigns aggregate to bit-identical results.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on (0,1), 53-bit resolution, never exactly 0
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // uniform on (-1,1)
    double next_sym() { return 2.0 * next_unit() - 1.0; }

    // standard normal, ziggurat with 128 layers; one u64 feeds both the layer
    // index and the candidate, wedges and the tail take the slow path
    double next_normal() {
        const auto& z = zig_tables();
        for (;;) {
            const std::uint64_t bits = next_u64();
            const int idx = static_cast<int>(bits & 127);
            const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0; // [-1,1)
            if (std::abs(u) < z.ratio[idx]) return u * z.x[idx];
            if (idx == 0) return tail(u < 0.0);
            const double cand = u * z.x[idx];
            const double f0 = std::exp(-0.5 * (z.x[idx] * z.x[idx] - cand * cand));
            const double f1 = std::exp(-0.5 * (z.x[idx + 1] * z.x[idx + 1] - cand * cand));
            if (f1 + next_unit() * (f0 - f1) < 1.0) return cand;
        }
    }

    // standard normal via Marsaglia polar; slower reference used to
    // cross-check the ziggurat in tests
    double next_normal_polar() {
        double u, v, r2;
        do {
            u = next_sym();
            v = next_sym();
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        return u * std::sqrt(-2.0 * std::log(r2) / r2);
    }

  private:
    static constexpr double zig_r = 3.442619855899;
    static constexpr double zig_v = 9.91256303526217e-3;

    struct ZigTables {
        double x[129];
        double ratio[128];
        ZigTables() {
            const double f_r = std::exp(-0.5 * zig_r * zig_r);
            x[0] = zig_v / f_r;
            x[1] = zig_r;
            x[128] = 0.0;
            for (int i = 2; i < 128; ++i)
                x[i] = std::sqrt(-2.0 *
                                 std::log(zig_v / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
            for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
        }
    };

    static const ZigTables& zig_tables() {
        static const ZigTables tables;
        return tables;
    }

    double tail(bool negative) {
        double x, y;
        do {
            x = std::log(next_unit()) / zig_r;
            y = std::log(next_unit());
        } while (-2.0 * y < x * x);
        return negative ? x - zig_r : zig_r - x;
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

} // namespace slelab
