#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "slelab/driver.hpp"
#include "slelab/errors.hpp"

namespace slelab {

// Driver dump format: one JSON header line {dt, seed, kind, count} terminated
// by '\n', then `count` little-endian 64-bit doubles (the values array).

inline void dump_driver(const DrivingPath& path, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw store_error("dump_driver: cannot open " + file);
    nlohmann::json header = {
        {"dt", path.dt},
        {"seed", path.seed},
        {"kind", to_string(path.kind)},
        {"count", path.values.size()},
    };
    const std::string line = header.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(path.values.data()),
              static_cast<std::streamsize>(path.values.size() * sizeof(double)));
    if (!out) throw store_error("dump_driver: short write to " + file);
}

inline DrivingPath load_driver(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw store_error("load_driver: cannot open " + file);
    std::string line;
    if (!std::getline(in, line)) throw store_error("load_driver: missing header line");
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded()) throw store_error("load_driver: header is not valid JSON");
    DrivingPath path;
    path.dt = header.at("dt").get<double>();
    path.seed = header.at("seed").get<std::uint64_t>();
    const std::string kind = header.at("kind").get<std::string>();
    if (kind == "brownian")
        path.kind = DriverKind::brownian;
    else if (kind == "constant")
        path.kind = DriverKind::constant;
    else if (kind == "custom")
        path.kind = DriverKind::custom;
    else
        throw store_error("load_driver: unknown kind '" + kind + "'");
    const auto count = header.at("count").get<std::size_t>();
    path.values.resize(count);
    in.read(reinterpret_cast<char*>(path.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw store_error("load_driver: truncated value block in " + file);
    if (!path.values.empty() && path.values[0] != 0.0)
        throw store_error("load_driver: U_0 must be 0");
    return path;
}

} // namespace slelab
