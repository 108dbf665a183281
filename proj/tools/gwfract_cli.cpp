#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "gwfract/error.hpp"
#include "gwfract/io.hpp"
#include "gwfract/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNotFound = 3;
constexpr int kExitResource = 4;

int exit_code(gwf::ErrorKind kind) {
    switch (kind) {
        case gwf::ErrorKind::InvalidInput:
        case gwf::ErrorKind::Capability: return kExitInvalid;
        case gwf::ErrorKind::NotFound:
        case gwf::ErrorKind::DegenerateSample: return kExitNotFound;
        case gwf::ErrorKind::ResourceLimit: return kExitResource;
    }
    return kExitInvalid;
}

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    gwf::fail(gwf::ErrorKind::InvalidInput, "config values must be scalars or arrays of scalars");
}

std::string config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

// Config keys fill options that were not given on the command line.
void apply_config(CLI::App& app, const nlohmann::json& cfg) {
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "command") continue;
        CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
        if (!opt && sub) opt = sub->get_option_no_throw(key);
        if (!opt) opt = app.get_option_no_throw("--" + key);
        if (!opt) gwf::fail(gwf::ErrorKind::InvalidInput, "unknown config key '" + key + "'");
        if (opt->count() > 0) continue;
        if (value.is_array())
            for (const auto& v : value) opt->add_result(scalar_text(v));
        else
            opt->add_result(scalar_text(value));
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galton-Watson fractals over similarity IFSs: simulation, fixed points, diffuse subset extraction"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    gwf::cli::Globals g;
    gwf::cli::Action action;
    gwf::cli::register_commands(app, g, action);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        nlohmann::json cfg;
        const std::string path = config_path(argc, argv);
        if (!path.empty()) {
            cfg = nlohmann::json::parse(gwf::read_file(path));
            if (!cfg.is_object()) gwf::fail(gwf::ErrorKind::InvalidInput, "config must be a JSON object");
            const bool has_sub = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
                for (auto* s : app.get_subcommands({})) if (s->get_name() == a) return true;
                return false;
            });
            if (!has_sub && cfg.contains("command")) args.push_back(cfg["command"].get<std::string>());
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
        if (!cfg.is_null()) apply_config(app, cfg);
        if (g.threads > 0) gwf::set_thread_count(g.threads);
        else gwf::init_threads_from_env();
        return action ? action() : kExitOk;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    } catch (const gwf::Error& e) {
        std::cerr << "error (" << gwf::to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error (invalid-input): " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::bad_alloc&) {
        std::cerr << "error (resource-limit): out of memory\n";
        return kExitResource;
    }
}
