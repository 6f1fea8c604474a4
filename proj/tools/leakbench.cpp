// leakbench command-line front end.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "leakbench/experiment.hpp"

namespace {

enum class LogLevel { Error, Info, Debug };

LogLevel log_level_from_env() {
    const char* env = std::getenv("LEAKBENCH_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "error") return LogLevel::Error;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    using namespace leakbench;
    CLI::App app{"Over-sampling leakage benchmark"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    const std::vector<std::string> commands = {"synth", "extract", "rank", "run", "leakage-demo", "search"};
    const std::map<std::string, std::string> help = {
        {"synth", "generate a synthetic cohort in csv_v1"},
        {"extract", "extract a feature matrix from records"},
        {"rank", "bootstrap AUC feature ranking (all/early/late)"},
        {"run", "cross-validated pipeline with a chosen sampler placement"},
        {"leakage-demo", "uniform-noise leakage experiment and 2-d geometry"},
        {"search", "None/Default/Tuned/Best sampler comparison"},
    };
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--jobs", jobs, "maximum parallel work units")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommands().front();

    const auto level = log_level_from_env();
    const auto started = std::chrono::steady_clock::now();
    std::string run_log;
    auto log = [&](const std::string& line) {
        run_log += timestamp() + " " + line + "\n";
        if (level != LogLevel::Error) std::cerr << "[info] " << line << "\n";
    };

    try {
        auto config = load_config(config_path);
        if (sub->count("--seed")) config.seed = seed;
        if (!out_dir.empty()) config.output_dir = out_dir;
        max_jobs() = jobs;
        if (level == LogLevel::Debug) std::cerr << "[debug] resolved config " << config_to_json(config).dump() << "\n";

        const std::filesystem::path out = config.output_dir;
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec) fail(ErrorKind::IoFailure, "cannot create output directory " + out.string());

        log("leakbench " + std::string(kVersion) + " " + command + ", seed " + std::to_string(config.seed) + ", jobs " +
            std::to_string(jobs));
        OutputFiles files;
        if (command == "synth")
            files = cmd_synth(config, log, out);
        else if (command == "extract")
            files = cmd_extract(config, log);
        else if (command == "rank")
            files = cmd_rank(config, log);
        else if (command == "run")
            files = cmd_run(config, log);
        else if (command == "leakage-demo")
            files = cmd_leakage_demo(config, log);
        else
            files = cmd_search(config, log);

        for (const auto& [name, contents] : files) {
            text::write_file_atomic(out / name, contents);
            log("wrote " + (out / name).string());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        log("done in " + text::format_fixed(seconds, 3) + " s");
        text::write_file_atomic(out / (command + ".log"), run_log);
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "IoFailure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "InternalError: " << e.what() << "\n";
        return 3;
    }
}
