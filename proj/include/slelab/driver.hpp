#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "slelab/errors.hpp"
#include "slelab/rng.hpp"

namespace slelab {

enum class DriverKind { brownian, constant, custom };

inline const char* to_string(DriverKind k) {
    switch (k) {
        case DriverKind::brownian: return "brownian";
        case DriverKind::constant: return "constant";
        case DriverKind::custom: return "custom";
    }
    return "?";
}

// Discretized driving function U_0..U_M on a uniform dt grid, U_0 = 0.
// In the a = 2/kappa parametrization the SLE driver is a standard Brownian
// motion, so brownian increments are N(0, dt).
struct DrivingPath {
    double dt = 0.0;
    std::vector<double> values; // M+1 entries, values[0] == 0
    std::uint64_t seed = 0;
    DriverKind kind = DriverKind::custom;

    std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
    double horizon() const { return dt * static_cast<double>(steps()); }
    double increment(std::size_t k) const { return values[k + 1] - values[k]; }
};

inline constexpr std::int64_t default_step_cap = 200'000'000;

inline DrivingPath sample_driver(double horizon, double dt, std::uint64_t seed,
                                 std::int64_t step_cap = default_step_cap) {
    if (!(horizon > 0.0) || !(dt > 0.0))
        throw validation_error("sample_driver: horizon and dt must be positive");
    const double steps_needed = std::ceil(horizon / dt);
    if (steps_needed > static_cast<double>(step_cap))
        throw resource_error("sample_driver: " + std::to_string(steps_needed) +
                             " steps exceed the cap of " + std::to_string(step_cap));
    const auto m = static_cast<std::size_t>(steps_needed);
    DrivingPath path;
    path.dt = dt;
    path.seed = seed;
    path.kind = DriverKind::brownian;
    path.values.resize(m + 1);
    path.values[0] = 0.0;
    Xoshiro256pp rng(seed);
    const double sd = std::sqrt(dt);
    for (std::size_t k = 0; k < m; ++k) path.values[k + 1] = path.values[k] + sd * rng.next_normal();
    return path;
}

inline DrivingPath constant_driver(double horizon, double dt) {
    if (!(horizon > 0.0) || !(dt > 0.0))
        throw validation_error("constant_driver: horizon and dt must be positive");
    DrivingPath path;
    path.dt = dt;
    path.kind = DriverKind::constant;
    path.values.assign(static_cast<std::size_t>(std::ceil(horizon / dt)) + 1, 0.0);
    return path;
}

// Streaming Brownian driver for sweeps too long to materialize.
class BrownianStream {
  public:
    BrownianStream(double dt, std::uint64_t key) : sd_(std::sqrt(dt)), rng_(key) {}
    double next_increment() { return sd_ * rng_.next_normal(); }

  private:
    double sd_;
    Xoshiro256pp rng_;
};

// Replays a materialized path as a stream; returns 0 increments past the end.
class PathStream {
  public:
    explicit PathStream(const DrivingPath& p) : path_(&p) {}
    double next_increment() {
        if (k_ >= path_->steps()) return 0.0;
        return path_->increment(k_++);
    }

  private:
    const DrivingPath* path_;
    std::size_t k_ = 0;
};

} // namespace slelab
