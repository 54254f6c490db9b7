// Command-line front end. Links only the C API of the shared library.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellfree/cellfree.h"

namespace {

struct ConfigHandle {
    cf_config* ptr = cf_config_create();
    ~ConfigHandle() { cf_config_free(ptr); }
};

struct ResultHandle {
    cf_result* ptr = nullptr;
    ~ResultHandle() { cf_result_free(ptr); }
};

int fail(int code, const char* stage, const char* msg) {
    std::fprintf(stderr, "simulate: %s: %s\n", stage, msg);
    return code;
}

std::string join_list(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-free multi-RIS downlink beamforming simulator"};
    app.get_formatter()->column_width(34);

    std::string config_path;
    std::string mode;
    std::string out_path;
    std::string trace_path;
    std::vector<double> pmax_dbm;
    std::uint64_t seed = 0;
    int realizations = -1;
    int threads = -1;
    bool has_seed = false;
    bool print_config = false;
    bool quiet = false;

    app.add_option("--config", config_path, "Configuration file (TOML-style key = value)");
    app.add_option("--mode", mode,
                   "proposed | no-coop | no-coop-no-consensus | random-caps | midpoint-caps | "
                   "ff-calibrated");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed");
    app.add_option("--pmax-dbm", pmax_dbm, "Transmit power sweep in dBm")->expected(-1);
    app.add_option("--realizations", realizations, "Channel realizations per sweep point");
    app.add_option("--threads", threads, "Worker threads across sweep cells");
    app.add_option("--out", out_path, "Result CSV path");
    app.add_option("--trace", trace_path, "Optional per-iteration trace CSV (first sweep cell)");
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");
    app.add_flag("--quiet", quiet, "Suppress the per-row summary on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // bad usage is a configuration error
    }
    has_seed = seed_opt->count() > 0;

    char err[512] = {0};
    ConfigHandle cfg;
    if (!cfg.ptr) return fail(3, "init", "out of memory");

    if (!config_path.empty() &&
        cf_config_load_file(cfg.ptr, config_path.c_str(), err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (!mode.empty() && cf_config_set(cfg.ptr, "run.mode", mode.c_str(), err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (has_seed && cf_config_set(cfg.ptr, "run.master_seed", std::to_string(seed).c_str(), err,
                                  sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (!pmax_dbm.empty() && cf_config_set(cfg.ptr, "run.pmax_dbm", join_list(pmax_dbm).c_str(),
                                           err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (realizations >= 0 &&
        cf_config_set(cfg.ptr, "run.realizations", std::to_string(realizations).c_str(), err,
                      sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (threads >= 0 && cf_config_set(cfg.ptr, "run.threads", std::to_string(threads).c_str(),
                                      err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (!out_path.empty() &&
        cf_config_set(cfg.ptr, "output.csv", out_path.c_str(), err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);
    if (!trace_path.empty() &&
        cf_config_set(cfg.ptr, "output.trace", trace_path.c_str(), err, sizeof(err)) != CF_OK)
        return fail(2, "config", err);

    if (const int rc = cf_config_validate(cfg.ptr, err, sizeof(err)); rc != CF_OK)
        return fail(rc, "config", err);

    if (print_config) {
        const long need = cf_config_render(cfg.ptr, nullptr, 0);
        std::string text(static_cast<std::size_t>(need) + 1, '\0');
        cf_config_render(cfg.ptr, text.data(), static_cast<long>(text.size()));
        std::fputs(text.c_str(), stdout);
        return 0;
    }

    ResultHandle res;
    if (const int rc = cf_run_sweep(cfg.ptr, &res.ptr, err, sizeof(err)); rc != CF_OK)
        return fail(rc, "run", err);

    if (!quiet) {
        const long n = cf_result_row_count(res.ptr);
        std::printf("p_max_dbm,seed,iterations,sum_rate_bpshz\n");
        for (long i = 0; i < n; ++i)
            std::printf("%.1f,%llu,%ld,%.6f\n", cf_result_pmax_dbm(res.ptr, i),
                        static_cast<unsigned long long>(cf_result_seed(res.ptr, i)),
                        cf_result_iterations(res.ptr, i), cf_result_sum_rate(res.ptr, i));
    }

    // Paths from the config file apply when no flag overrode them; the C API
    // keeps the merged view, so ask it where to write.
    char pathbuf[1024] = {0};
    if (out_path.empty() && cf_config_get(cfg.ptr, "output.csv", pathbuf, sizeof(pathbuf)) >= 0)
        out_path = pathbuf;
    if (trace_path.empty() &&
        cf_config_get(cfg.ptr, "output.trace", pathbuf, sizeof(pathbuf)) >= 0)
        trace_path = pathbuf;

    if (const int rc = cf_result_write_csv(res.ptr, out_path.c_str(), err, sizeof(err));
        rc != CF_OK)
        return fail(rc, "write", err);
    if (!trace_path.empty()) {
        if (const int rc = cf_result_write_trace_csv(res.ptr, trace_path.c_str(), err, sizeof(err));
            rc != CF_OK)
            return fail(rc, "write", err);
    }
    if (!quiet) std::fprintf(stderr, "simulate: wrote %s\n", out_path.c_str());
    return 0;
}
