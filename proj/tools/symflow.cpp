// Command-line driver: run one config (or a sweep of configs), validate a
// config without running it, or re-export plot files from a finished run.
//
//   symflow run <config.json> [--out DIR]
//   symflow run --sweep 'configs/*.json' [--out DIR]
//   symflow check <config.json>
//   symflow export <run-dir>
//
// Exit codes: 0 success (including a detected singular time), 2 config or
// artifact error, 3 incompatible initial data, 4 numerical failure.

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "symflow/errors.hpp"
#include "symflow/run.hpp"

namespace fs = std::filesystem;

namespace {

int run_one(const fs::path& config_path, const fs::path& out_dir, std::mutex* print_mutex) {
    std::string line;
    int code = 0;
    try {
        symflow::RunConfig cfg = symflow::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        const symflow::RunResult res = symflow::run(cfg);
        line = config_path.string() + ": " + res.status;
        if (res.singular_time >= 0.0)
            line += " (singular at t = " + std::to_string(res.singular_time) + ")";
        line += " -> " + res.dir.string();
        code = res.exit_code;
    } catch (const symflow::ConfigError& e) {
        line = config_path.string() + ": config error: " + e.what();
        code = 2;
    } catch (const symflow::IncompatibleData& e) {
        line = config_path.string() + ": incompatible data: " + e.what();
        code = 3;
    } catch (const symflow::Error& e) {
        line = config_path.string() + ": error: " + e.what();
        code = 4;
    }
    if (print_mutex) {
        std::lock_guard<std::mutex> lock(*print_mutex);
        (code == 0 ? std::cout : std::cerr) << line << "\n";
    } else {
        (code == 0 ? std::cout : std::cerr) << line << "\n";
    }
    return code;
}

std::vector<fs::path> glob_configs(const std::string& pattern) {
    const fs::path pat(pattern);
    fs::path dir = pat.parent_path();
    if (dir.empty()) dir = ".";
    const std::string name_pat = pat.filename().string();
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (fnmatch(name_pat.c_str(), name.c_str(), 0) == 0) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

unsigned sweep_threads(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("SYMFLOW_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) n = static_cast<unsigned>(v);
    }
    n = std::max(1u, std::min(n, static_cast<unsigned>(jobs)));
    return n;
}

int cmd_run(const std::string& config, const std::string& out, const std::string& sweep) {
    if (sweep.empty()) {
        if (config.empty()) {
            std::cerr << "symflow run: need a config file or --sweep\n";
            return 2;
        }
        return run_one(config, out, nullptr);
    }
    const auto configs = glob_configs(sweep);
    if (configs.empty()) {
        std::cerr << "symflow run: no configs match '" << sweep << "'\n";
        return 2;
    }
    const fs::path base = out.empty() ? fs::path("out") : fs::path(out);
    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{0};
    std::mutex print_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            const int code = run_one(configs[i], base / configs[i].stem(), &print_mutex);
            int cur = worst.load();
            while (code > cur && !worst.compare_exchange_weak(cur, code)) {
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < sweep_threads(configs.size()); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return worst.load();
}

int cmd_check(const std::string& config) {
    try {
        const symflow::RunConfig cfg = symflow::load_config(config);
        const symflow::IdentityReport report = symflow::validate_identities(cfg.space);
        if (!report.pass) {
            std::cerr << config << ": structure-constant identities fail";
            for (const auto& e : report.entries)
                if (e.residual >= 1e-10) std::cerr << "\n  " << e.what << ": " << e.residual;
            std::cerr << "\n";
            return 2;
        }
        std::cout << config << ": ok (space " << cfg.space_name << ", n = " << cfg.space.n()
                  << ", identity residual " << report.max_residual << ", compatible initial data)\n";
        return 0;
    } catch (const symflow::ConfigError& e) {
        std::cerr << config << ": config error: " << e.what() << "\n";
        return 2;
    } catch (const symflow::IncompatibleData& e) {
        std::cerr << config << ": incompatible data: " << e.what() << "\n";
        return 3;
    } catch (const symflow::Error& e) {
        std::cerr << config << ": error: " << e.what() << "\n";
        return 4;
    }
}

int cmd_export(const std::string& run_dir) {
    try {
        symflow::export_plotdata(run_dir);
        std::cout << run_dir << ": plot files written\n";
        return 0;
    } catch (const symflow::MissingArtifacts& e) {
        std::cerr << run_dir << ": " << e.what() << "\n";
        return 2;
    } catch (const symflow::Error& e) {
        std::cerr << run_dir << ": error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"G-invariant geometric-flow simulator and verifier"};
    app.require_subcommand(1);

    std::string config, out, sweep, run_dir;

    CLI::App* run_cmd = app.add_subcommand("run", "solve a config and write artifacts");
    run_cmd->add_option("config", config, "JSON config file");
    run_cmd->add_option("--out", out, "artifact directory (overrides config)");
    run_cmd->add_option("--sweep", sweep, "glob of config files to run in parallel");

    CLI::App* check_cmd = app.add_subcommand("check", "validate a config without solving");
    check_cmd->add_option("config", config, "JSON config file")->required();

    CLI::App* export_cmd = app.add_subcommand("export", "write plot files from a finished run");
    export_cmd->add_option("run_dir", run_dir, "directory containing manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return cmd_run(config, out, sweep);
    if (check_cmd->parsed()) return cmd_check(config);
    return cmd_export(run_dir);
}
