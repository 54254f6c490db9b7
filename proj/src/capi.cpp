#include "cellfree/cellfree.h"

#include <cstring>
#include <exception>
#include <string>

#include "cellfree/config_file.hpp"
#include "cellfree/experiment.hpp"

using cellfree::config::Table;
using cellfree::experiment::ConfigError;
using cellfree::experiment::ExperimentConfig;

// The config handle keeps the raw key-value table; it is materialized into a
// validated ExperimentConfig only when needed, so overrides can be applied in
// any order.
struct cf_config {
    Table table;
};

struct cf_result {
    cellfree::experiment::SweepOutcome outcome;
};

namespace {

void copy_error(const char* what, char* errmsg, int errmsg_len) {
    if (!errmsg || errmsg_len <= 0) return;
    std::strncpy(errmsg, what, static_cast<std::size_t>(errmsg_len) - 1);
    errmsg[errmsg_len - 1] = '\0';
}

template <typename Fn>
int guarded(Fn&& fn, char* errmsg, int errmsg_len) {
    try {
        fn();
        return CF_OK;
    } catch (const ConfigError& e) {
        copy_error(e.what(), errmsg, errmsg_len);
        return CF_ERR_CONFIG;
    } catch (const cellfree::config::ParseError& e) {
        copy_error(e.what(), errmsg, errmsg_len);
        return CF_ERR_CONFIG;
    } catch (const std::exception& e) {
        copy_error(e.what(), errmsg, errmsg_len);
        return CF_ERR_RUNTIME;
    } catch (...) {
        copy_error("unknown error", errmsg, errmsg_len);
        return CF_ERR_RUNTIME;
    }
}

}  // namespace

extern "C" {

cf_config* cf_config_create(void) { return new (std::nothrow) cf_config(); }

void cf_config_free(cf_config* cfg) { delete cfg; }

int cf_config_load_file(cf_config* cfg, const char* path, char* errmsg, int errmsg_len) {
    return guarded(
        [&] {
            if (!cfg || !path) throw ConfigError("null argument");
            for (auto& [key, value] : cellfree::config::parse_file(path))
                cfg->table[key] = value;
        },
        errmsg, errmsg_len);
}

int cf_config_load_string(cf_config* cfg, const char* text, char* errmsg, int errmsg_len) {
    return guarded(
        [&] {
            if (!cfg || !text) throw ConfigError("null argument");
            for (auto& [key, value] : cellfree::config::parse(text))
                cfg->table[key] = value;
        },
        errmsg, errmsg_len);
}

int cf_config_set(cf_config* cfg, const char* key, const char* value, char* errmsg,
                  int errmsg_len) {
    return guarded(
        [&] {
            if (!cfg || !key || !value) throw ConfigError("null argument");
            cfg->table[key] = cellfree::config::parse_value_lenient(value);
        },
        errmsg, errmsg_len);
}

int cf_config_validate(const cf_config* cfg, char* errmsg, int errmsg_len) {
    return guarded(
        [&] {
            if (!cfg) throw ConfigError("null argument");
            cellfree::experiment::config_from_table(cfg->table);
        },
        errmsg, errmsg_len);
}

long cf_config_get(const cf_config* cfg, const char* key, char* buf, long buf_len) {
    if (!cfg || !key) return -1;
    std::string text;
    try {
        const Table effective = cellfree::experiment::config_from_table(cfg->table).to_table();
        const auto it = effective.find(key);
        if (it == effective.end()) return -1;
        if (it->second.kind == cellfree::config::Value::Kind::string) {
            text = it->second.s;
        } else {
            Table one;
            one["v"] = it->second;
            text = cellfree::config::serialize(one);
            text = text.substr(4);  // strip "v = "
            if (!text.empty() && text.back() == '\n') text.pop_back();
        }
    } catch (...) {
        return -1;
    }
    if (buf && buf_len > 0) {
        const long n = std::min<long>(buf_len - 1, static_cast<long>(text.size()));
        std::memcpy(buf, text.data(), static_cast<std::size_t>(n));
        buf[n] = '\0';
    }
    return static_cast<long>(text.size());
}

long cf_config_render(const cf_config* cfg, char* buf, long buf_len) {
    if (!cfg) return -1;
    std::string text;
    try {
        text = cellfree::config::serialize(
            cellfree::experiment::config_from_table(cfg->table).to_table());
    } catch (...) {
        return -1;
    }
    if (buf && buf_len > 0) {
        const long n = std::min<long>(buf_len - 1, static_cast<long>(text.size()));
        std::memcpy(buf, text.data(), static_cast<std::size_t>(n));
        buf[n] = '\0';
    }
    return static_cast<long>(text.size());
}

int cf_run_sweep(const cf_config* cfg, cf_result** result, char* errmsg, int errmsg_len) {
    return guarded(
        [&] {
            if (!cfg || !result) throw ConfigError("null argument");
            const ExperimentConfig ec = cellfree::experiment::config_from_table(cfg->table);
            auto out = new cf_result();
            try {
                out->outcome = cellfree::experiment::run_sweep(ec);
            } catch (...) {
                delete out;
                throw;
            }
            *result = out;
        },
        errmsg, errmsg_len);
}

void cf_result_free(cf_result* result) { delete result; }

long cf_result_row_count(const cf_result* result) {
    return result ? static_cast<long>(result->outcome.rows.size()) : 0;
}

static const cellfree::experiment::ResultRow* row_at(const cf_result* result, long row) {
    if (!result || row < 0 || row >= static_cast<long>(result->outcome.rows.size()))
        return nullptr;
    return &result->outcome.rows[static_cast<std::size_t>(row)];
}

double cf_result_pmax_dbm(const cf_result* result, long row) {
    const auto* r = row_at(result, row);
    return r ? r->p_max_dbm : 0.0;
}

uint64_t cf_result_seed(const cf_result* result, long row) {
    const auto* r = row_at(result, row);
    return r ? r->seed : 0;
}

long cf_result_iterations(const cf_result* result, long row) {
    const auto* r = row_at(result, row);
    return r ? r->iterations : 0;
}

double cf_result_sum_rate(const cf_result* result, long row) {
    const auto* r = row_at(result, row);
    return r ? r->final_sum_rate : 0.0;
}

int cf_result_write_csv(const cf_result* result, const char* path, char* errmsg,
                        int errmsg_len) {
    return guarded(
        [&] {
            if (!result || !path) throw ConfigError("null argument");
            cellfree::experiment::write_csv(result->outcome.rows, result->outcome.bs_count,
                                            path);
        },
        errmsg, errmsg_len);
}

int cf_result_write_trace_csv(const cf_result* result, const char* path, char* errmsg,
                              int errmsg_len) {
    return guarded(
        [&] {
            if (!result || !path) throw ConfigError("null argument");
            cellfree::experiment::write_trace_csv(result->outcome.first_trace, path);
        },
        errmsg, errmsg_len);
}

}  // extern "C"
