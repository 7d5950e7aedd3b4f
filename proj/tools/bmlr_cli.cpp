// Command-line front end: recover | simulate | sweep | bounds | denoise.
// One flat JSON config file per run plus flag overrides; flags win. All
// randomness flows from --seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bmlr/denoise.hpp"
#include "bmlr/estimators.hpp"
#include "bmlr/rng.hpp"
#include "bmlr/simulation.hpp"
#include "bmlr/version.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw bmlr::ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw bmlr::ConfigError("bad config JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw bmlr::ConfigError("config must be a flat JSON object: " + path);
    return j;
}

// Flags win over config values: only options the user did not pass on the
// command line are overlaid from the config file.
template <typename T>
void overlay(const CLI::App& app, const json& cfg, const std::string& flag, const std::string& key,
             T& value) {
    const CLI::Option* opt = app.get_option(flag);
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

struct DimOpts {
    int n = 15, m = 13, p = 14, q = 12;
    long T = 1000;
    double sigma_r = 1.0, sigma_c = 1.0;
    std::string design = "uniform";
};

void add_dim_flags(CLI::App* cmd, DimOpts& d) {
    cmd->add_option("--n", d.n, "response rows");
    cmd->add_option("--m", d.m, "predictor rows");
    cmd->add_option("--p", d.p, "response cols");
    cmd->add_option("--q", d.q, "predictor cols");
    cmd->add_option("--T", d.T, "number of observations");
    cmd->add_option("--sigma-r", d.sigma_r, "row noise scale");
    cmd->add_option("--sigma-c", d.sigma_c, "column noise scale");
    cmd->add_option("--design", d.design, "design kind: canonical|uniform|orthogonal");
}

void overlay_dims(const CLI::App& cmd, const json& cfg, DimOpts& d) {
    overlay(cmd, cfg, "--n", "n", d.n);
    overlay(cmd, cfg, "--m", "m", d.m);
    overlay(cmd, cfg, "--p", "p", d.p);
    overlay(cmd, cfg, "--q", "q", d.q);
    overlay(cmd, cfg, "--T", "T", d.T);
    overlay(cmd, cfg, "--sigma-r", "sigma_r", d.sigma_r);
    overlay(cmd, cfg, "--sigma-c", "sigma_c", d.sigma_c);
    overlay(cmd, cfg, "--design", "design", d.design);
}

json dims_json(const DimOpts& d) {
    return json{{"n", d.n},           {"m", d.m},
                {"p", d.p},           {"q", d.q},
                {"T", d.T},           {"sigma_r", d.sigma_r},
                {"sigma_c", d.sigma_c}, {"design", d.design}};
}

bmlr::TrialConfig to_trial_config(const DimOpts& d) {
    bmlr::TrialConfig cfg;
    cfg.n = d.n;
    cfg.m = d.m;
    cfg.p = d.p;
    cfg.q = d.q;
    cfg.T = d.T;
    cfg.sigma_r = d.sigma_r;
    cfg.sigma_c = d.sigma_c;
    cfg.design = bmlr::design_from_string(d.design);
    return cfg;
}

json matrix_json(const bmlr::RealMatrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

long count_failures(const std::vector<bmlr::ErrorRecord>& records) {
    long failures = 0;
    for (const auto& r : records) {
        if (!r.ok()) ++failures;
    }
    return failures;
}

int cmd_recover(const DimOpts& dims, uint64_t seed, const std::string& out,
                const std::string& format) {
    bmlr::ModelParameters params;
    params.A_star = bmlr::generate_A_star(dims.n, dims.m, bmlr::derive_seed(seed, bmlr::kStreamParamA));
    params.B_star = bmlr::generate_B_star(dims.q, dims.p, bmlr::derive_seed(seed, bmlr::kStreamParamB));
    params.sigma_r = 0.0;  // recovery is the noiseless pipeline
    params.sigma_c = 0.0;

    const bmlr::DesignKind kind = bmlr::design_from_string(dims.design);
    const bmlr::Dataset ds = bmlr::generate_dataset(params, kind, dims.T, bmlr::derive_seed(seed, bmlr::kStreamData));

    bmlr::RealMatrix a, b;
    if (kind == bmlr::DesignKind::Canonical) {
        bmlr::CanonicalRecovery rec = bmlr::recover_noiseless_canonical(ds.responses, dims.m, dims.q);
        a = std::move(rec.A);
        b = std::move(rec.B);
    } else {
        auto [ra, rb] = bmlr::recover_noiseless_general(bmlr::compute_c_hat(ds));
        a = std::move(ra);
        b = std::move(rb);
    }
    const double dev_a = bmlr::max_norm(a - params.A_star);
    const double dev_b = bmlr::max_norm(b - params.B_star);

    json cfg = dims_json(dims);
    cfg["sigma_r"] = 0.0;
    cfg["sigma_c"] = 0.0;
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw bmlr::IoError("cannot open for writing: " + out);
        if (format == "csv") {
            f << "# bmlr " << BMLR_VERSION << "\n# command=recover\n# config=" << cfg.dump()
              << "\n# seed=" << seed << "\n# deviation_A_max=" << bmlr::format_double(dev_a)
              << "\n# deviation_B_max=" << bmlr::format_double(dev_b) << "\n";
            f << "matrix,row,col,value\n";
            for (int r = 0; r < a.rows(); ++r)
                for (int c = 0; c < a.cols(); ++c)
                    f << "A," << r << ',' << c << ',' << bmlr::format_double(a(r, c)) << "\n";
            for (int r = 0; r < b.rows(); ++r)
                for (int c = 0; c < b.cols(); ++c)
                    f << "B," << r << ',' << c << ',' << bmlr::format_double(b(r, c)) << "\n";
        } else {
            json j{{"meta",
                    {{"tool", std::string("bmlr ") + BMLR_VERSION},
                     {"command", "recover"},
                     {"config", cfg},
                     {"seed", seed}}},
                   {"A", matrix_json(a)},
                   {"B", matrix_json(b)},
                   {"deviation_A_max", dev_a},
                   {"deviation_B_max", dev_b}};
            f << j.dump(2) << "\n";
        }
        if (!f) throw bmlr::IoError("write failed: " + out);
    }
    std::cout << "recover: max-norm deviations A=" << bmlr::format_double(dev_a)
              << " B=" << bmlr::format_double(dev_b) << "\n";
    return 0;
}

int cmd_simulate(const DimOpts& dims, int trials, bool sparse, double delta, uint64_t seed,
                 int jobs, const std::string& out, const std::string& format) {
    bmlr::TrialConfig cfg = to_trial_config(dims);
    cfg.sparse = sparse;
    cfg.delta = delta;
    std::vector<bmlr::ErrorRecord> records(static_cast<size_t>(trials));
    bmlr::parallel_for(trials, jobs, [&](long ti) {
        bmlr::ErrorRecord rec = bmlr::run_trial(cfg, bmlr::derive_seed(seed, 0, static_cast<uint64_t>(ti)));
        rec.trial = static_cast<int>(ti);
        records[static_cast<size_t>(ti)] = std::move(rec);
    });
    json meta_cfg = dims_json(dims);
    meta_cfg["trials"] = trials;
    meta_cfg["sparse"] = sparse;
    meta_cfg["delta"] = delta;
    const long failures = count_failures(records);
    if (!out.empty()) {
        bmlr::emit_results(records, out, bmlr::format_from_string(format),
                           bmlr::RunMetadata{"simulate", meta_cfg.dump(), seed, failures});
    }
    std::cout << "simulate: " << trials << " trials, " << failures << " failed\n";
    return 0;
}

int cmd_sweep(const DimOpts& dims, const std::string& param, const std::vector<double>& values,
              int trials, bool sparse, double delta, uint64_t seed, int jobs,
              const std::string& out, const std::string& summary_out, const std::string& format) {
    bmlr::SweepSpec spec;
    spec.base = to_trial_config(dims);
    spec.base.sparse = sparse;
    spec.base.delta = delta;
    spec.param_name = param;
    spec.values = values;
    spec.trials_per_point = trials;
    spec.master_seed = seed;
    spec.jobs = jobs;

    const std::vector<bmlr::ErrorRecord> records = bmlr::run_sweep(spec);
    const long failures = count_failures(records);

    json meta_cfg = dims_json(dims);
    meta_cfg["param"] = param;
    meta_cfg["values"] = values;
    meta_cfg["trials_per_point"] = trials;
    meta_cfg["sparse"] = sparse;
    meta_cfg["delta"] = delta;
    const bmlr::RunMetadata meta{"sweep", meta_cfg.dump(), seed, failures};
    if (!out.empty()) {
        bmlr::emit_results(records, out, bmlr::format_from_string(format), meta);
    }
    if (!summary_out.empty()) {
        bmlr::emit_results(bmlr::aggregate_errors(records), summary_out,
                           bmlr::format_from_string(format), meta);
    }
    std::cout << "sweep " << param << ": " << records.size() << " records, " << failures
              << " failed\n";
    return 0;
}

std::vector<bmlr::TrialConfig> default_bounds_grid(const std::string& bound) {
    using bmlr::TrialConfig;
    std::vector<TrialConfig> grid;
    auto point = [](int n, int m, int p, int q, long T) {
        TrialConfig c;
        c.n = n;
        c.m = m;
        c.p = p;
        c.q = q;
        c.T = T;
        c.sigma_r = 1.0;
        c.sigma_c = 1.0;
        c.design = bmlr::DesignKind::OrthogonalScaled;
        return c;
    };
    if (bound == "gauss_max_tail") {
        for (int n : {10, 100, 1000}) {
            TrialConfig c;
            c.n = n;
            grid.push_back(c);
        }
        return grid;
    }
    if (bound == "A_max") {
        for (auto [n, m, p, q, T] : {std::tuple{4, 3, 4, 4, 256}, std::tuple{3, 2, 5, 4, 200},
                                     std::tuple{5, 3, 4, 5, 320}}) {
            TrialConfig c = point(n, m, p, q, T);
            c.gen.a_entry_low = 0.5;  // keeps A* entries strictly interior
            c.gen.a_entry_high = 1.0;
            grid.push_back(c);
        }
        return grid;
    }
    if (bound == "A_sparse_frob" || bound == "A_sparse_support") {
        for (auto [n, m, p, q, T] : {std::tuple{6, 6, 6, 6, 512}, std::tuple{4, 4, 6, 6, 400},
                                     std::tuple{6, 4, 8, 6, 640}}) {
            TrialConfig c = point(n, m, p, q, T);
            c.gen.a_row_nonzeros = 3;
            c.gen.b_entry_low = 1.0;  // beta* around 1.5
            c.gen.b_entry_high = 2.0;
            grid.push_back(c);
        }
        return grid;
    }
    if (bound == "B_sparse_frob" || bound == "B_sparse_support") {
        for (auto [n, m, p, q, T] : {std::tuple{6, 4, 5, 4, 160}, std::tuple{4, 3, 4, 4, 96},
                                     std::tuple{8, 4, 6, 5, 240}}) {
            grid.push_back(point(n, m, p, q, T));  // magnitude defaults to 4*tau inside
        }
        return grid;
    }
    for (auto [n, m, p, q, T] : {std::tuple{3, 2, 2, 2, 64}, std::tuple{2, 3, 2, 2, 96},
                                 std::tuple{4, 2, 3, 2, 128}}) {
        grid.push_back(point(n, m, p, q, T));
    }
    return grid;
}

int cmd_bounds(const std::string& bound, long trials, double delta, uint64_t seed, int jobs,
               const std::string& out, const std::string& format) {
    const std::vector<std::string> all = {"B_max",          "B_op",
                                          "B_frob",         "A_max",
                                          "B_sparse_frob",  "B_sparse_support",
                                          "A_sparse_frob",  "A_sparse_support",
                                          "gauss_max_tail"};
    std::vector<std::string> selected;
    if (bound == "all") {
        selected = all;
    } else {
        selected.push_back(bound);
    }
    std::vector<bmlr::CoverageReport> reports;
    for (const std::string& name : selected) {
        auto part = bmlr::verify_bound_coverage(name, default_bounds_grid(name), trials, delta,
                                                seed, jobs);
        reports.insert(reports.end(), part.begin(), part.end());
    }
    json meta_cfg{{"bound", bound}, {"trials", trials}, {"delta", delta}};
    if (!out.empty()) {
        bmlr::emit_results(reports, out, bmlr::format_from_string(format),
                           bmlr::RunMetadata{"bounds", meta_cfg.dump(), seed});
    }
    for (const auto& r : reports) {
        std::cout << "bounds " << r.bound << " [" << r.params << "] empirical "
                  << bmlr::format_double(r.empirical) << " vs budget "
                  << bmlr::format_double(r.budget) << " + slack " << bmlr::format_double(r.slack)
                  << (r.pass ? " ok" : " VIOLATED") << "\n";
    }
    return 0;
}

int cmd_denoise(const std::string& images_dir, int count, int size, int train, int test,
                const std::vector<double>& epsilons, uint64_t seed, const std::string& out,
                const std::string& format, const std::string& previews,
                const std::string& corrections_dir) {
    bmlr::ImageBatch all;
    if (!images_dir.empty()) {
        all = bmlr::load_png_directory(images_dir);
    } else {
        all = bmlr::synthetic_image_batch(count, size, size, bmlr::derive_seed(seed, bmlr::kStreamImage));
    }
    if (train + test > all.count) {
        throw bmlr::ConfigError("train + test exceeds the batch size (" +
                                std::to_string(all.count) + ")");
    }
    if (train < 1 || test < 1) throw bmlr::ConfigError("train and test must be >= 1");

    bmlr::ImageBatch train_batch(train, all.height, all.width);
    bmlr::ImageBatch test_batch(test, all.height, all.width);
    for (int i = 0; i < train; ++i)
        for (int ch = 0; ch < 3; ++ch) train_batch.set_channel(i, ch, all.channel(i, ch));
    for (int i = 0; i < test; ++i)
        for (int ch = 0; ch < 3; ++ch) test_batch.set_channel(i, ch, all.channel(train + i, ch));

    json meta_cfg{{"images", images_dir.empty() ? "synthetic" : images_dir},
                  {"count", all.count},
                  {"H", all.height},
                  {"W", all.width},
                  {"train", train},
                  {"test", test},
                  {"epsilon", epsilons}};

    std::ofstream f;
    const bool csv = format == "csv";
    json json_rows = json::array();
    if (!out.empty() && csv) {
        f.open(out);
        if (!f) throw bmlr::IoError("cannot open for writing: " + out);
        f << "# bmlr " << BMLR_VERSION << "\n# command=denoise\n# config=" << meta_cfg.dump()
          << "\n# seed=" << seed << "\n";
        f << "epsilon,image_index,D_on,D_oc\n";
    }

    for (size_t ei = 0; ei < epsilons.size(); ++ei) {
        const double eps = epsilons[ei];
        const bmlr::CorruptionModel model = bmlr::build_corruption(
            all.height, all.width, eps, bmlr::derive_seed(seed, 0xC0, static_cast<uint64_t>(ei)));
        const bmlr::ImageBatch noisy_train = bmlr::corrupt_batch(train_batch, model);
        const bmlr::ImageBatch noisy_test = bmlr::corrupt_batch(test_batch, model);
        const bmlr::CorrectionMatrices corrections = bmlr::fit_correction(noisy_train, train_batch);
        const bmlr::ImageBatch corrected = bmlr::apply_correction(noisy_test, corrections);
        const bmlr::DistanceReport rep = bmlr::evaluate_distances(test_batch, noisy_test, corrected);

        for (int i = 0; i < test; ++i) {
            if (f.is_open()) {
                f << bmlr::format_double(eps) << ',' << i << ','
                  << bmlr::format_double(rep.d_on[static_cast<size_t>(i)]) << ','
                  << bmlr::format_double(rep.d_oc[static_cast<size_t>(i)]) << "\n";
            }
            json_rows.push_back(json{{"epsilon", eps},
                                     {"image_index", i},
                                     {"D_on", rep.d_on[static_cast<size_t>(i)]},
                                     {"D_oc", rep.d_oc[static_cast<size_t>(i)]}});
        }
        std::cout << "denoise eps=" << bmlr::format_double(eps)
                  << ": mean D_on=" << bmlr::format_double(rep.mean_on)
                  << " mean D_oc=" << bmlr::format_double(rep.mean_oc) << "\n";

        if (!previews.empty()) {
            char tag[32];
            std::snprintf(tag, sizeof(tag), "eps%zu_", ei);
            const int keep = std::min(test, 8);
            bmlr::ImageBatch noisy_head(keep, all.height, all.width);
            bmlr::ImageBatch corr_head(keep, all.height, all.width);
            for (int i = 0; i < keep; ++i) {
                for (int ch = 0; ch < 3; ++ch) {
                    noisy_head.set_channel(i, ch, noisy_test.channel(i, ch));
                    corr_head.set_channel(i, ch, corrected.channel(i, ch));
                }
            }
            bmlr::write_png_previews(noisy_head, previews, std::string("noisy_") + tag);
            bmlr::write_png_previews(corr_head, previews, std::string("corrected_") + tag);
        }
        if (!corrections_dir.empty()) {
            char tag[32];
            std::snprintf(tag, sizeof(tag), "eps%zu", ei);
            bmlr::save_corrections(corrections, std::filesystem::path(corrections_dir) / tag);
        }
    }

    if (f.is_open() && !f) throw bmlr::IoError("write failed: " + out);
    if (!out.empty() && !csv) {
        std::ofstream jf(out);
        if (!jf) throw bmlr::IoError("cannot open for writing: " + out);
        json j{{"meta",
                {{"tool", std::string("bmlr ") + BMLR_VERSION},
                 {"command", "denoise"},
                 {"config", meta_cfg},
                 {"seed", seed}}},
               {"records", json_rows}};
        jf << j.dump(2) << "\n";
        if (!jf) throw bmlr::IoError("write failed: " + out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("bmlr ") + BMLR_VERSION +
                 " - matrix-valued linear regression estimators, simulations, and denoising"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    uint64_t seed = 0;
    std::string out;
    std::string format = "csv";
    int jobs = 0;
    app.add_option("--config", config_path, "flat JSON config file (flags win)")->envname("BMLR_CONFIG");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output path");
    app.add_option("--format", format, "output format: csv|json");
    app.add_option("--jobs", jobs, "max concurrent trials (0 = hardware)");

    DimOpts dims;

    CLI::App* recover = app.add_subcommand("recover", "noiseless exact recovery run");
    add_dim_flags(recover, dims);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo trials at a fixed config");
    int sim_trials = 100;
    bool sparse = false;
    double delta = 0.1;
    add_dim_flags(simulate, dims);
    simulate->add_option("--trials", sim_trials, "trial count");
    simulate->add_flag("--sparse", sparse, "use thresholded estimators and record support metrics");
    simulate->add_option("--delta", delta, "confidence level for sparse thresholds");

    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep emitting one record per trial");
    std::string sweep_param = "T";
    std::vector<double> sweep_values;
    int sweep_trials = 100;
    std::string summary_out;
    add_dim_flags(sweep, dims);
    sweep->add_option("--param", sweep_param, "swept parameter: n|m|p|q|T|sigma");
    sweep->add_option("--values", sweep_values, "swept values")->expected(-1);
    sweep->add_option("--trials", sweep_trials, "trials per point");
    sweep->add_option("--summary-out", summary_out, "also write aggregated summary here");
    sweep->add_flag("--sparse", sparse, "use thresholded estimators");
    sweep->add_option("--delta", delta, "confidence level for sparse thresholds");

    CLI::App* bounds = app.add_subcommand("bounds", "empirical coverage of the probability bounds");
    std::string bound_name = "all";
    long bound_trials = 2000;
    bounds->add_option("--bound", bound_name,
                       "B_max|B_op|B_frob|A_max|B_sparse_frob|B_sparse_support|A_sparse_frob|"
                       "A_sparse_support|gauss_max_tail|all");
    bounds->add_option("--trials", bound_trials, "trials per grid point");
    bounds->add_option("--delta", delta, "nominal failure budget");

    CLI::App* denoise = app.add_subcommand("denoise", "corrupt, fit corrections, evaluate distances");
    std::string images_dir;
    int dn_count = 250, dn_size = 8, dn_train = 200, dn_test = 50;
    std::vector<double> epsilons;
    std::string previews, corrections_dir;
    denoise->add_option("--images", images_dir, "directory of equal-size 8-bit RGB PNGs");
    denoise->add_option("--count", dn_count, "synthetic batch size (when no --images)");
    denoise->add_option("--size", dn_size, "synthetic image side length");
    denoise->add_option("--train", dn_train, "training images (taken from the front)");
    denoise->add_option("--test", dn_test, "test images (taken after the training block)");
    denoise->add_option("--epsilon", epsilons, "corruption levels")->expected(-1);
    denoise->add_option("--previews", previews, "write noisy/corrected preview PNGs here");
    denoise->add_option("--save-corrections", corrections_dir, "serialize fitted corrections here");

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(config_path);
        overlay(app, cfg, "--seed", "seed", seed);
        overlay(app, cfg, "--out", "out", out);
        overlay(app, cfg, "--format", "format", format);
        overlay(app, cfg, "--jobs", "jobs", jobs);
        if (format != "csv" && format != "json") {
            throw bmlr::ConfigError("format must be csv or json, got " + format);
        }

        if (recover->parsed()) {
            overlay_dims(*recover, cfg, dims);
            if (recover->get_option("--T")->count() == 0 && !cfg.contains("T")) {
                dims.T = (dims.design == "canonical") ? static_cast<long>(dims.m) * dims.q
                                                      : 2L * dims.m * dims.q;
            }
            return cmd_recover(dims, seed, out, format);
        }
        if (simulate->parsed()) {
            overlay_dims(*simulate, cfg, dims);
            overlay(*simulate, cfg, "--trials", "trials", sim_trials);
            overlay(*simulate, cfg, "--sparse", "sparse", sparse);
            overlay(*simulate, cfg, "--delta", "delta", delta);
            return cmd_simulate(dims, sim_trials, sparse, delta, seed, jobs, out, format);
        }
        if (sweep->parsed()) {
            overlay_dims(*sweep, cfg, dims);
            overlay(*sweep, cfg, "--param", "param", sweep_param);
            overlay(*sweep, cfg, "--values", "values", sweep_values);
            overlay(*sweep, cfg, "--trials", "trials", sweep_trials);
            overlay(*sweep, cfg, "--summary-out", "summary_out", summary_out);
            overlay(*sweep, cfg, "--sparse", "sparse", sparse);
            overlay(*sweep, cfg, "--delta", "delta", delta);
            if (sweep_values.empty()) throw bmlr::ConfigError("sweep needs --values");
            return cmd_sweep(dims, sweep_param, sweep_values, sweep_trials, sparse, delta, seed,
                             jobs, out, summary_out, format);
        }
        if (bounds->parsed()) {
            overlay(*bounds, cfg, "--bound", "bound", bound_name);
            overlay(*bounds, cfg, "--trials", "trials", bound_trials);
            overlay(*bounds, cfg, "--delta", "delta", delta);
            return cmd_bounds(bound_name, bound_trials, delta, seed, jobs, out, format);
        }
        if (denoise->parsed()) {
            overlay(*denoise, cfg, "--images", "images", images_dir);
            overlay(*denoise, cfg, "--count", "count", dn_count);
            overlay(*denoise, cfg, "--size", "size", dn_size);
            overlay(*denoise, cfg, "--train", "train", dn_train);
            overlay(*denoise, cfg, "--test", "test", dn_test);
            overlay(*denoise, cfg, "--epsilon", "epsilon", epsilons);
            overlay(*denoise, cfg, "--previews", "previews", previews);
            overlay(*denoise, cfg, "--save-corrections", "save_corrections", corrections_dir);
            if (epsilons.empty()) epsilons = {0.01, 0.02, 0.05};
            return cmd_denoise(images_dir, dn_count, dn_size, dn_train, dn_test, epsilons, seed,
                               out, format, previews, corrections_dir);
        }
    } catch (const bmlr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
