// lrdlab: command-line front end for the layered rate-distortion laboratory.
//
// Subcommands: ratedist, cover, layered, sucref, tradeoff. Each takes a JSON
// config (--config) plus optional overrides; outputs are deterministic in
// (config, seed). Exit codes: 0 ok, 2 config error, 3 construction/size
// error, 4 I/O error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lrd/experiment.hpp"

namespace {

lrd::json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw lrd::io_error("cannot open config file " + path);
    lrd::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw lrd::domain_error(std::string("config parse error: ") + e.what());
    }
    return j;
}

struct Overrides {
    std::string config_path;
    std::string out, unit, verify;
    std::uint64_t seed = 0;
    int threads = 0;
    bool has_seed = false, has_out = false, has_unit = false, has_verify = false,
         has_threads = false;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "JSON experiment config")->required();
    cmd->add_option("--seed", ov.seed, "override config seed")->each([&](const std::string&) {
        ov.has_seed = true;
    });
    cmd->add_option("--out", ov.out, "override output path")->each([&](const std::string&) {
        ov.has_out = true;
    });
    cmd->add_option("--unit", ov.unit, "rate unit: nats|bits")->each([&](const std::string&) {
        ov.has_unit = true;
    });
    cmd->add_option("--threads", ov.threads, "worker threads")->each([&](const std::string&) {
        ov.has_threads = true;
    });
    cmd->add_option("--verify", ov.verify, "verification mode: exhaustive|sampled")
        ->each([&](const std::string&) { ov.has_verify = true; });
}

int run_command(const std::string& name, const Overrides& ov) {
    lrd::json j = load_json_file(ov.config_path);
    if (j.contains("command") && j.at("command").get<std::string>() != name)
        throw lrd::domain_error("config command does not match the CLI subcommand");
    j["command"] = name;
    lrd::ExperimentConfig cfg = lrd::parse_config(j);
    if (ov.has_seed) cfg.seed = ov.seed;
    if (ov.has_out) cfg.out = ov.out;
    if (ov.has_unit) cfg.unit = ov.unit;
    if (ov.has_threads) cfg.threads = ov.threads;
    if (ov.has_verify) cfg.verify = ov.verify;
    if (cfg.unit != "nats" && cfg.unit != "bits")
        throw lrd::domain_error("unit must be nats|bits");
    if (cfg.verify != "exhaustive" && cfg.verify != "sampled")
        throw lrd::domain_error("verify must be exhaustive|sampled");

    lrd::RunResult result = lrd::run_experiment(cfg);
    std::cout << result.report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lrdlab: layered rate-distortion coding laboratory"};
    app.require_subcommand(1);

    const char* names[] = {"ratedist", "cover", "layered", "sucref", "tradeoff"};
    const char* descs[] = {
        "rate-distortion function, dispersion, and finite-n rate",
        "build and verify a covering codebook",
        "layered coding Monte Carlo experiment",
        "two-decoder successive refinement simulation",
        "rate-vs-complexity sweep over layer counts",
    };
    Overrides ov[5];
    CLI::App* cmds[5];
    for (int i = 0; i < 5; ++i) {
        cmds[i] = app.add_subcommand(names[i], descs[i]);
        add_common(cmds[i], ov[i]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (int i = 0; i < 5; ++i)
            if (cmds[i]->parsed()) return run_command(names[i], ov[i]);
        return 2;
    } catch (const lrd::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lrd::size_error& e) {
        std::cerr << "size error: " << e.what() << "\n";
        return 3;
    } catch (const lrd::construction_error& e) {
        std::cerr << "construction error: " << e.what() << "\n";
        return 3;
    } catch (const lrd::convergence_error& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const lrd::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
