#pragma once

// Experiment configuration, deterministic execution, and CSV/JSON emission.
// This header pulls in nlohmann/json; only the CLI and tests include it.

#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lrd/covering.hpp"
#include "lrd/errors.hpp"
#include "lrd/layered.hpp"
#include "lrd/math.hpp"
#include "lrd/ratedist.hpp"
#include "lrd/report.hpp"
#include "lrd/rng.hpp"
#include "lrd/sucref.hpp"
#include "lrd/types.hpp"

namespace lrd {

using json = nlohmann::ordered_json;

struct ExperimentConfig {
    std::string command;  // ratedist | cover | layered | sucref | tradeoff
    SourceModel source;
    std::int64_t n = 0;
    double D = 0.0, D1 = 0.0, D2 = 0.0;
    double epsilon = 0.1, eps1 = 0.1, eps2 = 0.1;
    std::vector<int> L_values = {1};
    std::int64_t trials = 2000;
    std::uint64_t seed = 1;
    std::string verify = "exhaustive";  // or "sampled"
    std::uint64_t verify_samples = 100000;
    double confidence = 0.99;
    std::string out;
    std::string codebook_out;
    std::string unit = "nats";  // or "bits"
    int threads = 1;
    bool allow_unequal_eps_gaussian = false;
    std::uint64_t codeword_budget = 1ULL << 24;
    std::uint64_t materialize_budget = 1ULL << 20;
    // cover subcommand
    std::string cover_kind;  // hamming_type | successive | sphere
    std::vector<std::int64_t> type_counts;
    double R_outer = 0.0, r_inner = 0.0;
};

namespace detail {

inline SourceModel parse_source(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw domain_error("config: source must be an object with a 'kind'");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli") return SourceModel::bernoulli(j.at("p").get<double>());
    if (kind == "gaussian") return SourceModel::gaussian(j.at("variance").get<double>());
    if (kind == "discrete") {
        return SourceModel::discrete(j.at("pmf").get<std::vector<double>>(),
                                     j.at("distortion").get<std::vector<std::vector<double>>>());
    }
    throw domain_error("config: unknown source kind '" + kind + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    if (!j.contains("command")) throw domain_error("config: missing 'command'");
    c.command = j.at("command").get<std::string>();
    if (c.command != "ratedist" && c.command != "cover" && c.command != "layered" &&
        c.command != "sucref" && c.command != "tradeoff")
        throw domain_error("config: unknown command '" + c.command + "'");

    if (j.contains("source")) c.source = detail::parse_source(j.at("source"));
    else if (c.command != "cover") throw domain_error("config: missing 'source'");

    auto get_or = [&](const char* key, auto dflt) {
        using T = decltype(dflt);
        return j.contains(key) ? j.at(key).get<T>() : dflt;
    };
    c.n = get_or("n", std::int64_t{0});
    c.D = get_or("D", 0.0);
    c.D1 = get_or("D1", 0.0);
    c.D2 = get_or("D2", 0.0);
    c.epsilon = get_or("epsilon", 0.1);
    c.eps1 = get_or("eps1", c.epsilon);
    c.eps2 = get_or("eps2", c.epsilon);
    if (j.contains("L")) {
        if (j.at("L").is_array()) c.L_values = j.at("L").get<std::vector<int>>();
        else c.L_values = {j.at("L").get<int>()};
    }
    c.trials = get_or("trials", std::int64_t{2000});
    c.seed = get_or("seed", std::uint64_t{1});
    c.verify = get_or("verify", std::string("exhaustive"));
    c.verify_samples = get_or("verify_samples", std::uint64_t{100000});
    c.confidence = get_or("confidence", 0.99);
    c.out = get_or("out", std::string());
    c.codebook_out = get_or("codebook_out", std::string());
    c.unit = get_or("unit", std::string("nats"));
    c.threads = get_or("threads", 1);
    c.allow_unequal_eps_gaussian = get_or("allow_unequal_eps_gaussian", false);
    c.codeword_budget = get_or("codeword_budget", std::uint64_t{1} << 24);
    c.materialize_budget = get_or("materialize_budget", std::uint64_t{1} << 20);
    c.cover_kind = get_or("cover_kind", std::string());
    if (j.contains("type_counts"))
        c.type_counts = j.at("type_counts").get<std::vector<std::int64_t>>();
    c.R_outer = get_or("R_outer", 0.0);
    c.r_inner = get_or("r_inner", 0.0);

    if (c.unit != "nats" && c.unit != "bits") throw domain_error("config: unit must be nats|bits");
    if (c.verify != "exhaustive" && c.verify != "sampled")
        throw domain_error("config: verify must be exhaustive|sampled");
    if (c.threads < 1) throw domain_error("config: threads must be >= 1");
    if (c.trials < 0) throw domain_error("config: trials must be >= 0");
    for (int L : c.L_values)
        if (L < 1) throw domain_error("config: L values must be >= 1");
    return c;
}

// nats -> requested unit for rates (and log-counts)
inline double unit_scale(const ExperimentConfig& c) {
    return c.unit == "bits" ? 1.0 / std::log(2.0) : 1.0;
}

template <class F>
inline void parallel_for(std::int64_t count, int threads, F&& f) {
    if (threads <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (;;) {
                std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                f(i);
            }
        });
    for (auto& w : workers) w.join();
}

// ---------------------------------------------------------------------------
// Layered experiment runner (shared by the layered and tradeoff commands).

struct LayeredRunStats {
    int L = 0;
    std::int64_t n = 0;
    std::int64_t trials = 0;
    std::int64_t errors = 0;
    bool ladder_ok = true;    // all non-error trials met the full ladder
    bool rateless_ok = true;  // all non-error prefix decodes met D_k
    double total_rate = 0.0;  // nats
    double sum_sizes = 0.0;
    double log_prod_sizes = 0.0;
    double mean_examined = 0.0;
    double max_examined = 0.0;
    Interval ci;  // exact 99% CI on the error frequency
    double wall_ms = 0.0;
    double codebook_bytes = 0.0;
    bool materialized = false;
    std::vector<double> per_layer_log_sizes;
    std::vector<double> distortions;
    double shell = 0.0;
};

inline double codebook_file_bytes(const LayeredCodebook& cb) {
    if (!cb.materialized) return 0.0;
    double bytes = 5 + 1 + 4 + 4 + 8.0 * cb.schedule.L;
    for (int i = 0; i < cb.schedule.L; ++i) {
        if (cb.is_binary())
            bytes += static_cast<double>(cb.mat[static_cast<std::size_t>(i)].bits.rows()) *
                     ((cb.schedule.n + 7) / 8);
        else
            bytes += static_cast<double>(cb.mat[static_cast<std::size_t>(i)].reals.size()) * 8.0;
    }
    return bytes;
}

inline LayeredRunStats run_layered_trials(const SourceModel& source, double D, int L,
                                          std::int64_t n, double epsilon, std::int64_t trials,
                                          std::uint64_t seed, int threads,
                                          const BuildOptions& build_opts) {
    auto t0 = std::chrono::steady_clock::now();
    LayerSchedule sched = schedule_equal_rate(source, D, L, n, epsilon);
    LayeredCodebook cb = build_layered(sched, mix_key(seed, 0xc0debULL, static_cast<std::uint64_t>(L)),
                                       build_opts);

    LayeredRunStats st;
    st.L = L;
    st.n = n;
    st.trials = trials;
    st.materialized = cb.materialized;
    st.per_layer_log_sizes = cb.schedule.layer_log_sizes;
    st.distortions = cb.schedule.distortions;
    st.shell = cb.first_layer_shell;

    std::vector<EncodeResult> results(static_cast<std::size_t>(trials));
    bool binary = cb.is_binary();
    double p = binary ? source.bernoulli_p() : 0.0;
    // source draws keyed by (seed, trial) only, so sweeps at different L see
    // paired sample paths
    parallel_for(trials, threads, [&](std::int64_t i) {
        Rng rng(mix_key(seed, 0x50a6ce00ULL, static_cast<std::uint64_t>(i)));
        if (binary) {
            auto x = sample_bernoulli_word(rng, n, p);
            results[static_cast<std::size_t>(i)] = encode_layered(std::span<const std::uint64_t>(x), cb);
            if (!results[static_cast<std::size_t>(i)].error) {
                // rateless check: prefix reconstructions against the source block
                const auto& enc = results[static_cast<std::size_t>(i)];
                for (int k = 1; k <= L; ++k) {
                    auto recon = decode_prefix_binary(enc, cb, k);
                    std::int64_t dist = 0;
                    for (std::size_t w = 0; w < recon.size(); ++w)
                        dist += std::popcount(recon[w] ^ x[w]);
                    if (static_cast<double>(dist) / n >
                        cb.schedule.distortions[static_cast<std::size_t>(k - 1)] + 1e-12)
                        results[static_cast<std::size_t>(i)].failed_layer = -2;  // rateless breach
                }
            }
        } else {
            auto x = sample_gaussian_word(rng, n, source.variance);
            results[static_cast<std::size_t>(i)] = encode_layered(std::span<const double>(x), cb);
            if (!results[static_cast<std::size_t>(i)].error) {
                const auto& enc = results[static_cast<std::size_t>(i)];
                for (int k = 1; k <= L; ++k) {
                    auto recon = decode_prefix_gaussian(enc, cb, k);
                    double d2 = 0.0;
                    for (std::size_t j = 0; j < recon.size(); ++j) {
                        double diff = recon[j] - x[j];
                        d2 += diff * diff;
                    }
                    if (d2 / n > cb.schedule.distortions[static_cast<std::size_t>(k - 1)] + 1e-9)
                        results[static_cast<std::size_t>(i)].failed_layer = -2;
                }
            }
        }
    });

    for (std::int64_t i = 0; i < trials; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        if (r.error) {
            ++st.errors;
            continue;
        }
        if (r.failed_layer == -2) st.rateless_ok = false;
        for (int k = 0; k < L; ++k)
            if (r.per_layer_residual[static_cast<std::size_t>(k)] >
                cb.schedule.distortions[static_cast<std::size_t>(k)] + 1e-12)
                st.ladder_ok = false;
    }
    ComplexityReport comp = complexity_report(cb, results);
    st.total_rate = comp.total_rate;
    st.sum_sizes = comp.sum_sizes;
    st.log_prod_sizes = comp.log_prod_sizes;
    st.mean_examined = comp.mean_examined;
    st.max_examined = comp.max_examined;
    st.ci = trials > 0 ? clopper_pearson(st.errors, trials, 0.99) : Interval{0.0, 1.0};
    st.codebook_bytes = codebook_file_bytes(cb);
    auto t1 = std::chrono::steady_clock::now();
    st.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return st;
}

// Fixed tradeoff CSV schema.
inline std::vector<std::string> tradeoff_csv_header() {
    return {"L",    "n",     "total_rate", "rate_minus_RD", "sum_Mi",        "prod_Mi_log",
            "empirical_eps", "ci_lo", "ci_hi",      "mean_examined", "wall_ms"};
}

inline std::vector<std::string> tradeoff_csv_row(const LayeredRunStats& st, double rd_nats,
                                                 double scale) {
    double emp = st.trials > 0 ? static_cast<double>(st.errors) / st.trials : 0.0;
    return {std::to_string(st.L),
            std::to_string(st.n),
            format_g12(st.total_rate * scale),
            format_g12((st.total_rate - rd_nats) * scale),
            format_g12(st.sum_sizes),
            format_g12(st.log_prod_sizes * scale),
            format_g12(emp),
            format_g12(st.ci.lo),
            format_g12(st.ci.hi),
            format_g12(st.mean_examined),
            format_g12(st.wall_ms)};
}

inline json layered_stats_json(const LayeredRunStats& st, double rd_nats, double scale) {
    json j;
    j["L"] = st.L;
    j["n"] = st.n;
    j["trials"] = st.trials;
    j["errors"] = st.errors;
    j["empirical_eps"] = round_g12(st.trials > 0 ? static_cast<double>(st.errors) / st.trials : 0.0);
    j["ci_lo"] = round_g12(st.ci.lo);
    j["ci_hi"] = round_g12(st.ci.hi);
    j["total_rate"] = round_g12(st.total_rate * scale);
    j["rate_minus_RD"] = round_g12((st.total_rate - rd_nats) * scale);
    j["sum_Mi"] = round_g12(st.sum_sizes);
    j["prod_Mi_log"] = round_g12(st.log_prod_sizes * scale);
    j["mean_examined"] = round_g12(st.mean_examined);
    j["max_examined"] = round_g12(st.max_examined);
    j["ladder_ok"] = st.ladder_ok;
    j["rateless_ok"] = st.rateless_ok;
    j["materialized"] = st.materialized;
    j["codebook_bytes"] = st.codebook_bytes;
    j["first_layer_shell"] = round_g12(st.shell);
    json rates = json::array(), ds = json::array();
    for (double v : st.per_layer_log_sizes) rates.push_back(round_g12(v / st.n * scale));
    for (double v : st.distortions) ds.push_back(round_g12(v));
    j["per_layer_rates"] = rates;
    j["distortions"] = ds;
    j["wall_ms"] = round_g12(st.wall_ms);
    return j;
}

// ---------------------------------------------------------------------------
// Command runners. Each returns the JSON report; CSV (when the command has a
// tabular form) rides along.

struct RunResult {
    json report;
    std::string csv;  // empty when not tabular
};

inline RunResult run_ratedist(const ExperimentConfig& c) {
    double scale = unit_scale(c);
    double r = rate_distortion(c.source, c.D);
    double v = dispersion(c.source, c.D);
    RunResult out;
    out.report["schema"] = 1;
    out.report["command"] = "ratedist";
    out.report["unit"] = c.unit;
    out.report["D"] = round_g12(c.D);
    out.report["rate"] = round_g12(r * scale);
    out.report["dispersion"] = round_g12(v * scale * scale);
    if (c.n > 0) {
        out.report["n"] = c.n;
        out.report["epsilon"] = round_g12(c.epsilon);
        out.report["finite_n_rate"] = round_g12(finite_n_rate(c.source, c.D, c.epsilon, c.n) * scale);
    }
    if (c.source.kind == SourceKind::discrete && !c.source.is_bernoulli())
        out.report["rate_method"] = "blahut_arimoto";
    return out;
}

inline RunResult run_cover(const ExperimentConfig& c) {
    RunResult out;
    out.report["schema"] = 1;
    out.report["command"] = "cover";
    out.report["cover_kind"] = c.cover_kind;
    double scale = unit_scale(c);
    CoverOptions opts;
    opts.codeword_budget = c.codeword_budget;
    opts.verify_mode = c.verify == "exhaustive" ? Verification::Mode::exhaustive
                                                : Verification::Mode::sampled;
    opts.verify_samples = c.verify_samples;
    opts.confidence = c.confidence;

    CodebookFile file;
    if (c.cover_kind == "hamming_type") {
        TypeVector q{c.type_counts};
        CoveringCode code = cover_hamming_type_class(q, c.D, c.seed, opts);
        std::int64_t n = q.n();
        double rate = code.log_size() / n;
        double rd = rd_binary(static_cast<double>(q.counts[1]) / n, c.D);
        out.report["n"] = n;
        out.report["centers"] = code.count();
        out.report["rate"] = round_g12(rate * scale);
        out.report["rate_overhead"] = round_g12((rate - rd) * scale);
        out.report["repairs"] = code.verification.repairs;
        out.report["cp_upper_bound"] = round_g12(code.verification.cp_upper_bound);
        file.kind = SourceKind::discrete;
        file.n = code.n;
        file.layers.push_back({code.count(), pack_bits_bytes(code.bits), {}});
    } else if (c.cover_kind == "successive") {
        TypeVector q{c.type_counts};
        SuccessiveCovering sc = successive_cover(q, c.D1, c.D2, c.seed, opts);
        std::int64_t n = q.n();
        std::size_t max_inner = 0;
        for (const auto& in : sc.inner) max_inner = std::max(max_inner, in.count());
        double joint_rate = std::log(static_cast<double>(sc.outer.count()) *
                                     static_cast<double>(max_inner)) / n;
        out.report["n"] = n;
        out.report["outer_centers"] = sc.outer.count();
        out.report["max_inner_centers"] = max_inner;
        out.report["outer_rate"] = round_g12(sc.outer.log_size() / n * scale);
        out.report["joint_rate"] = round_g12(joint_rate * scale);
        file.kind = SourceKind::discrete;
        file.n = sc.outer.n;
        file.layers.push_back({sc.outer.count(), pack_bits_bytes(sc.outer.bits), {}});
    } else if (c.cover_kind == "sphere") {
        CoveringCode code =
            cover_sphere(c.n, c.R_outer, c.r_inner, c.seed, c.verify_samples, c.confidence, opts);
        double rate = code.log_size() / c.n;
        out.report["n"] = c.n;
        out.report["centers"] = code.count();
        out.report["rate"] = round_g12(rate * scale);
        out.report["rate_overhead"] =
            round_g12((rate - 0.5 * std::log(c.R_outer * c.R_outer / (c.r_inner * c.r_inner))) * scale);
        out.report["repairs"] = code.verification.repairs;
        out.report["cp_upper_bound"] = round_g12(code.verification.cp_upper_bound);
        file.kind = SourceKind::gaussian;
        file.n = code.n;
        file.layers.push_back({code.count(), {}, code.reals});
    } else {
        throw domain_error("config: cover_kind must be hamming_type|successive|sphere");
    }
    if (!c.codebook_out.empty()) write_codebook_file(c.codebook_out, file);
    return out;
}

inline RunResult run_layered_cmd(const ExperimentConfig& c) {
    BuildOptions bopts;
    bopts.materialize_budget = c.materialize_budget;
    bopts.verify_samples = c.verify_samples;
    bopts.confidence = c.confidence;
    double scale = unit_scale(c);
    double rd = rate_distortion(c.source, c.D);

    LayeredRunStats st = run_layered_trials(c.source, c.D, c.L_values.front(), c.n, c.epsilon,
                                            c.trials, c.seed, c.threads, bopts);
    RunResult out;
    out.report["schema"] = 1;
    out.report["command"] = "layered";
    out.report["unit"] = c.unit;
    out.report["result"] = layered_stats_json(st, rd, scale);
    CsvTable csv;
    csv.header = tradeoff_csv_header();
    csv.rows.push_back(tradeoff_csv_row(st, rd, scale));
    out.csv = csv.to_string();

    if (!c.codebook_out.empty()) {
        LayerSchedule sched = schedule_equal_rate(c.source, c.D, c.L_values.front(), c.n, c.epsilon);
        LayeredCodebook cb = build_layered(
            sched, mix_key(c.seed, 0xc0debULL, static_cast<std::uint64_t>(c.L_values.front())), bopts);
        write_codebook_file(c.codebook_out, to_codebook_file(cb));
    }
    return out;
}

inline RunResult run_sucref_cmd(const ExperimentConfig& c) {
    SucrefOptions sopts;
    sopts.trials = c.trials;
    sopts.seed = c.seed;
    sopts.allow_unequal_eps_gaussian = c.allow_unequal_eps_gaussian;
    SucrefReport rep = simulate_sucref(c.source, c.D1, c.D2, c.eps1, c.eps2, c.n, sopts);
    double scale = unit_scale(c);
    RunResult out;
    out.report["schema"] = 1;
    out.report["command"] = "sucref";
    out.report["unit"] = c.unit;
    out.report["n"] = rep.n;
    out.report["trials"] = rep.trials;
    out.report["rate1"] = round_g12(rep.rate1 * scale);
    out.report["rate2"] = round_g12(rep.rate2 * scale);
    out.report["dec1_failures"] = rep.dec1_failures;
    out.report["dec2_failures"] = rep.dec2_failures;
    out.report["dec1_ci"] = {round_g12(rep.ci1.lo), round_g12(rep.ci1.hi)};
    out.report["dec2_ci"] = {round_g12(rep.ci2.lo), round_g12(rep.ci2.hi)};
    out.report["exact_dec1_fail_mass"] = round_g12(rep.exact_dec1_fail_mass);
    out.report["exact_dec2_fail_mass"] = round_g12(rep.exact_dec2_fail_mass);
    if (c.source.kind == SourceKind::discrete) {
        out.report["delta_r1"] = round_g12(rep.delta_r1 * scale);
        out.report["delta_r2"] = round_g12(rep.delta_r2 * scale);
    } else {
        out.report["r1"] = round_g12(rep.r1);
        out.report["r2"] = round_g12(rep.r2);
    }
    return out;
}

inline RunResult run_tradeoff(const ExperimentConfig& c) {
    BuildOptions bopts;
    bopts.materialize_budget = c.materialize_budget;
    bopts.verify_samples = c.verify_samples;
    bopts.confidence = c.confidence;
    double scale = unit_scale(c);
    double rd = rate_distortion(c.source, c.D);

    RunResult out;
    out.report["schema"] = 1;
    out.report["command"] = "tradeoff";
    out.report["unit"] = c.unit;
    CsvTable csv;
    csv.header = tradeoff_csv_header();
    json results = json::array();
    for (int L : c.L_values) {
        LayeredRunStats st =
            run_layered_trials(c.source, c.D, L, c.n, c.epsilon, c.trials, c.seed, c.threads, bopts);
        csv.rows.push_back(tradeoff_csv_row(st, rd, scale));
        results.push_back(layered_stats_json(st, rd, scale));
    }
    out.report["results"] = results;
    out.csv = csv.to_string();
    return out;
}

inline RunResult run_experiment(const ExperimentConfig& c) {
    RunResult out;
    if (c.command == "ratedist") out = run_ratedist(c);
    else if (c.command == "cover") out = run_cover(c);
    else if (c.command == "layered") out = run_layered_cmd(c);
    else if (c.command == "sucref") out = run_sucref_cmd(c);
    else if (c.command == "tradeoff") out = run_tradeoff(c);
    else throw domain_error("run_experiment: unknown command " + c.command);

    if (!c.out.empty()) {
        bool csv = c.out.size() > 4 && c.out.substr(c.out.size() - 4) == ".csv";
        if (csv && !out.csv.empty()) write_text_file(c.out, out.csv);
        else write_text_file(c.out, out.report.dump(2) + "\n");
    }
    return out;
}

}  // namespace lrd
