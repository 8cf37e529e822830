#include "bubblesim/bubblesim_c.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "core/experiment.hpp"

using namespace bubblesim;

struct bsim {
    Config config;
    std::string last_error;

    std::optional<ExperimentResult> run;
    std::optional<ExperimentResult> tilted;
    std::optional<MartingaleReport> martingale;
    std::optional<MatchingDemoResult> demo;
};

namespace {

int fail(bsim* h, int code, const std::string& what) {
    if (h) h->last_error = what;
    return code;
}

template <typename Fn>
int guarded(bsim* h, Fn&& fn) {
    if (!h) return BSIM_ERR_INVALID_ARG;
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        return fail(h, (int)BSIM_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(h, (int)BSIM_ERR_RUNTIME, e.what());
    }
}

int write_file(bsim* h, const char* path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return fail(h, (int)BSIM_ERR_IO, std::string("cannot write ") + path);
    out << content;
    return static_cast<int>(BSIM_OK);
}

} // namespace

extern "C" {

const char* bsim_version(void) { return "bubblesim 1.0.0"; }

bsim* bsim_create(void) { return new (std::nothrow) bsim(); }

void bsim_destroy(bsim* h) { delete h; }

const char* bsim_last_error(const bsim* h) { return h ? h->last_error.c_str() : ""; }

int bsim_config_load_file(bsim* h, const char* path) {
    return guarded(h, [&]() {
        if (!path) return fail(h, (int)BSIM_ERR_INVALID_ARG, "path is null");
        try {
            h->config = Config::load(path);
        } catch (const std::runtime_error& e) {
            return fail(h, (int)BSIM_ERR_IO, e.what());
        }
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_config_load_text(bsim* h, const char* text) {
    return guarded(h, [&]() {
        if (!text) return fail(h, (int)BSIM_ERR_INVALID_ARG, "text is null");
        h->config = Config::parse(text);
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_config_set(bsim* h, const char* key, const char* value) {
    return guarded(h, [&]() {
        if (!key || !value) return fail(h, (int)BSIM_ERR_INVALID_ARG, "key/value is null");
        h->config.set(key, value);
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_config_write(bsim* h, const char* path) {
    return guarded(h, [&]() {
        if (!path) return fail(h, (int)BSIM_ERR_INVALID_ARG, "path is null");
        return write_file(h, path, h->config.serialize());
    });
}

int bsim_apply_preset(bsim* h, const char* name) {
    return guarded(h, [&]() {
        if (!name) return fail(h, (int)BSIM_ERR_INVALID_ARG, "name is null");
        apply_preset(h->config, name);
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_validate(bsim* h, char* buf, size_t buflen, int* n_errors) {
    return guarded(h, [&]() {
        const ConfigIssues issues = validate_config(h->config);
        if (n_errors) *n_errors = static_cast<int>(issues.errors.size());
        if (buf && buflen > 0) {
            const std::string text = issues.str();
            std::strncpy(buf, text.c_str(), buflen - 1);
            buf[buflen - 1] = '\0';
        }
        return static_cast<int>(BSIM_OK);
    });
}

namespace {

int ensure_valid_config(bsim* h) {
    const ConfigIssues issues = validate_config(h->config);
    if (!issues.ok()) return fail(h, (int)BSIM_ERR_CONFIG, issues.str());
    return static_cast<int>(BSIM_OK);
}

} // namespace

int bsim_run(bsim* h, const char* out_dir) {
    return guarded(h, [&]() {
        if (int rc = ensure_valid_config(h); rc != BSIM_OK) return rc;
        h->run = run_experiment(h->config);
        h->tilted.reset();
        if (out_dir) emit_figure_data(*h->run, out_dir);
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_run_tilt(bsim* h, const char* out_dir) {
    return guarded(h, [&]() {
        if (int rc = ensure_valid_config(h); rc != BSIM_OK) return rc;
        TiltResult r = run_tilt_experiment(h->config);
        h->run = std::move(r.base);
        h->tilted = std::move(r.tilted);
        if (out_dir) {
            emit_figure_data(*h->run, std::string(out_dir) + "/base");
            emit_figure_data(*h->tilted, std::string(out_dir) + "/tilted");
        }
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_verify_martingale(bsim* h, const char* out_csv_path) {
    return guarded(h, [&]() {
        h->martingale = run_verify_martingale(h->config);
        if (out_csv_path) return write_file(h, out_csv_path, h->martingale->csv());
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_matching_demo(bsim* h, const char* out_csv_path) {
    return guarded(h, [&]() {
        h->demo = run_matching_demo(h->config);
        if (out_csv_path) return write_file(h, out_csv_path, h->demo->population_csv);
        return static_cast<int>(BSIM_OK);
    });
}

int bsim_result_scalar(bsim* h, const char* key, double* out) {
    return guarded(h, [&]() {
        if (!key || !out) return fail(h, (int)BSIM_ERR_INVALID_ARG, "key/out is null");
        const std::string k = key;
        const auto from_run = [&](const ExperimentResult& r) -> std::optional<double> {
            if (k == "paths") return static_cast<double>(r.aggregate.paths);
            if (k == "periods") return static_cast<double>(r.times.size() - 1);
            if (k == "wall_seconds") return r.aggregate.wall_seconds;
            if (k == "paths_per_second") return r.aggregate.paths_per_second;
            if (k == "mean_beta_1" && r.aggregate.mean_beta.size() > 1)
                return r.aggregate.mean_beta[1];
            if (k == "se_beta_1" && r.aggregate.se_beta.size() > 1) return r.aggregate.se_beta[1];
            return std::nullopt;
        };
        if (h->run) {
            if (auto v = from_run(*h->run)) {
                *out = *v;
                return static_cast<int>(BSIM_OK);
            }
        }
        if (h->tilted) {
            if (k == "tilt_mean_beta_1") {
                *out = h->tilted->aggregate.mean_beta[1];
                return static_cast<int>(BSIM_OK);
            }
            if (k == "tilt_se_beta_1") {
                *out = h->tilted->aggregate.se_beta[1];
                return static_cast<int>(BSIM_OK);
            }
        }
        if (h->martingale) {
            if (k == "periods") {
                *out = static_cast<double>(h->martingale->rows.size());
                return static_cast<int>(BSIM_OK);
            }
            if (k == "max_residual") {
                *out = h->martingale->max_residual;
                return static_cast<int>(BSIM_OK);
            }
            if (k == "max_mc_ratio") {
                *out = h->martingale->max_mc_ratio;
                return static_cast<int>(BSIM_OK);
            }
            if (k == "analytic_ok") {
                *out = h->martingale->analytic_ok ? 1.0 : 0.0;
                return static_cast<int>(BSIM_OK);
            }
            if (k == "mc_ok") {
                *out = h->martingale->mc_ok ? 1.0 : 0.0;
                return static_cast<int>(BSIM_OK);
            }
        }
        if (h->demo) {
            if (k == "agents") {
                *out = h->demo->agents;
                return static_cast<int>(BSIM_OK);
            }
            if (k == "pairs_formed") {
                *out = h->demo->pairs_formed;
                return static_cast<int>(BSIM_OK);
            }
        }
        return fail(h, (int)BSIM_ERR_NO_RESULT, "no result holds scalar " + k);
    });
}

int bsim_result_series(bsim* h, const char* key, double* buf, int cap, int* len) {
    return guarded(h, [&]() {
        if (!key || !buf || cap <= 0) return fail(h, (int)BSIM_ERR_INVALID_ARG, "bad output buffer");
        const std::string k = key;
        const std::vector<double>* src = nullptr;
        std::vector<double> scratch;
        if (h->run) {
            if (k == "times") src = &h->run->times;
            if (k == "mean_beta") src = &h->run->aggregate.mean_beta;
            if (k == "se_beta") src = &h->run->aggregate.se_beta;
            if (k == "mean_p_diff") src = &h->run->aggregate.mean_p_diff;
            if (k == "se_p_diff") src = &h->run->aggregate.se_p_diff;
        }
        if (!src && h->tilted) {
            if (k == "tilt_mean_beta") src = &h->tilted->aggregate.mean_beta;
            if (k == "tilt_se_beta") src = &h->tilted->aggregate.se_beta;
        }
        if (!src && h->martingale) {
            if (k == "q" || k == "residual") {
                for (const auto& row : h->martingale->rows)
                    scratch.push_back(k == "q" ? row.q : row.residual);
                src = &scratch;
            }
        }
        if (!src) return fail(h, (int)BSIM_ERR_NO_RESULT, "no result holds series " + k);
        const int n = std::min<int>(cap, static_cast<int>(src->size()));
        for (int i = 0; i < n; ++i) buf[i] = (*src)[i];
        if (len) *len = n;
        return static_cast<int>(BSIM_OK);
    });
}

} // extern "C"
