// lobsim: run market scenarios, verify event logs, and inspect book
// snapshots.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lob/io.hpp"
#include "lob/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitParse = 2;

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<std::string> residual_mode,
            std::optional<std::string> tariff) {
    auto text = read_file(config_path);
    if (!text) {
        std::cerr << "error: cannot read config " << config_path << "\n";
        return kExitParse;
    }
    lob::ScenarioConfig cfg;
    try {
        cfg = lob::parse_scenario(*text);
        if (seed) cfg.seed = *seed;
        if (residual_mode) {
            if (*residual_mode != "deferred" && *residual_mode != "immediate")
                throw lob::ScenarioError("--residual-mode must be deferred or immediate");
            cfg.engine.immediate_residuals = *residual_mode == "immediate";
        }
        if (tariff) cfg.engine.tariff.per_kwh = lob::io::parse_price(*tariff, cfg.engine.tick);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        lob::Engine engine = lob::run_scenario(cfg);
        fs::create_directories(out_dir);
        const auto& tick = cfg.engine.tick;
        write_file(fs::path(out_dir) / "events.jsonl",
                   lob::io::serialize_log(engine, cfg.stop_time));
        write_file(fs::path(out_dir) / "dispatches.csv",
                   lob::io::dispatches_csv(engine.dispatches(), tick));
        write_file(fs::path(out_dir) / "settlement.csv",
                   lob::io::settlement_csv(engine.settlements(), tick));
        write_file(fs::path(out_dir) / "prices.csv", lob::io::prices_csv(engine.dispatches(), tick));
        std::cout << engine.dispatches().size() << " dispatch(es), " << engine.log().size()
                  << " event(s) written to " << out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_replay(const std::string& log_path) {
    auto text = read_file(log_path);
    if (!text) {
        std::cerr << "error: cannot read log " << log_path << "\n";
        return kExitParse;
    }
    try {
        auto result = lob::io::replay(*text);
        std::cout << result.message << "\n";
        return result.verified ? 0 : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "corrupt log: " << e.what() << "\n";
        return kExitParse;
    }
}

int cmd_inspect(const std::string& log_path, lob::Time at) {
    auto text = read_file(log_path);
    if (!text) {
        std::cerr << "error: cannot read log " << log_path << "\n";
        return kExitParse;
    }
    if (at < 0) {
        std::cerr << "error: snapshot time must be nonnegative\n";
        return kExitParse;
    }
    try {
        auto parsed = lob::io::parse_log(*text);
        lob::Time end = 0;
        for (const auto& line : parsed.lines) {
            auto j = lob::io::json::parse(line);
            end = std::max(end, j.at("time").get<lob::Time>());
        }
        if (parsed.stop_time) end = std::max(end, *parsed.stop_time);
        if (at > end) {
            std::cerr << "error: time " << at << " is beyond log end (" << end << ")\n";
            return kExitRuntime;
        }
        lob::Engine engine(parsed.config);
        engine.run(parsed.inputs, at);
        std::cout << lob::io::render_book_table(engine.book(), parsed.config.tick);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "corrupt log: " << e.what() << "\n";
        return kExitParse;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"limit order book market simulator for transactive energy"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", log_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> residual_mode, tariff;
    lob::Time at = 0;

    auto* run = app.add_subcommand("run", "run a scenario and write outputs");
    run->add_option("--config", config_path, "scenario config path")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--residual-mode", residual_mode, "deferred|immediate");
    run->add_option("--tariff", tariff, "override the per-kWh tariff adder");

    auto* replay = app.add_subcommand("replay", "verify an event log by re-execution");
    replay->add_option("--log", log_path, "event log path")->required();

    auto* inspect = app.add_subcommand("inspect", "print the book snapshot at a time");
    inspect->add_option("--log", log_path, "event log path")->required();
    inspect->add_option("--at", at, "snapshot time")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir, seed, residual_mode, tariff);
    if (replay->parsed()) return cmd_replay(log_path);
    return cmd_inspect(log_path, at);
}
