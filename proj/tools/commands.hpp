#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

namespace gwf::cli {

struct Globals {
    bool json = false;
    bool timing = false;
    int threads = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string config;
};

using Action = std::function<int()>;

void register_commands(CLI::App& app, Globals& g, Action& action);

// Prints a result object: pretty JSON with --json, "key: value" lines otherwise.
void emit(const nlohmann::json& result, const Globals& g);

}  // namespace gwf::cli
