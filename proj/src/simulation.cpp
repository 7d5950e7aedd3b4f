#include "bmlr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "bmlr/linalg.hpp"
#include "bmlr/rng.hpp"
#include "bmlr/version.hpp"
#include "json.hpp"

namespace bmlr {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<long>(workers, count));
    if (workers == 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

ModelParameters make_parameters(const TrialConfig& cfg, uint64_t seed) {
    const ParamGenOptions& gen = cfg.gen;
    ModelParameters params;
    params.sigma_r = cfg.sigma_r;
    params.sigma_c = cfg.sigma_c;

    if (gen.a_row_nonzeros > 0) {
        const int nz = std::min(gen.a_row_nonzeros, cfg.m);
        RandomStream rs(derive_seed(seed, kStreamParamA));
        RealMatrix a(cfg.n, cfg.m);
        std::vector<int> idx(static_cast<size_t>(cfg.m));
        for (int i = 0; i < cfg.n; ++i) {
            for (int k = 0; k < cfg.m; ++k) idx[static_cast<size_t>(k)] = k;
            // Partial Fisher-Yates: the first nz slots become the support.
            for (int k = 0; k < nz; ++k) {
                const int pick = k + static_cast<int>(rs.uniform() * (cfg.m - k));
                std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(pick)]);
                a(i, idx[static_cast<size_t>(k)]) = 1.0 / nz;
            }
        }
        params.A_star = std::move(a);
    } else if (gen.a_entry_low == 0.0 && gen.a_entry_high == 1.0) {
        params.A_star = generate_A_star(cfg.n, cfg.m, derive_seed(seed, kStreamParamA));
    } else {
        if (!(gen.a_entry_low >= 0.0) || !(gen.a_entry_high > gen.a_entry_low)) {
            throw ConfigError("a_entry range must satisfy 0 <= low < high");
        }
        RandomStream rs(derive_seed(seed, kStreamParamA));
        RealMatrix a(cfg.n, cfg.m);
        for (int i = 0; i < cfg.n; ++i) {
            double sum = 0.0;
            for (int k = 0; k < cfg.m; ++k) {
                a(i, k) = gen.a_entry_low + (gen.a_entry_high - gen.a_entry_low) * rs.uniform();
                sum += a(i, k);
            }
            for (int k = 0; k < cfg.m; ++k) a(i, k) /= sum;
        }
        params.A_star = std::move(a);
    }

    if (gen.b_sparse_magnitude > 0.0) {
        RandomStream rs(derive_seed(seed, kStreamParamB));
        RealMatrix b(cfg.q, cfg.p);
        bool any = false;
        do {
            any = false;
            for (double& v : b.data()) {
                if (rs.uniform() < gen.b_sparse_density) {
                    v = (rs.uniform() < 0.5 ? -1.0 : 1.0) * gen.b_sparse_magnitude;
                    any = true;
                } else {
                    v = 0.0;
                }
            }
        } while (!any);
        params.B_star = std::move(b);
    } else if (gen.b_entry_low == 0.0 && gen.b_entry_high == 1.0) {
        params.B_star = generate_B_star(cfg.q, cfg.p, derive_seed(seed, kStreamParamB));
    } else {
        if (!(gen.b_entry_high > gen.b_entry_low)) {
            throw ConfigError("b_entry range must satisfy low < high");
        }
        RandomStream rs(derive_seed(seed, kStreamParamB));
        RealMatrix b(cfg.q, cfg.p);
        for (double& v : b.data()) {
            v = gen.b_entry_low + (gen.b_entry_high - gen.b_entry_low) * rs.uniform();
        }
        params.B_star = std::move(b);
    }
    return params;
}

namespace {

void record_errors(ErrorRecord& rec, const RealMatrix& a_est, const RealMatrix& b_est,
                   const ModelParameters& params) {
    const RealMatrix da = a_est - params.A_star;
    const RealMatrix db = b_est - params.B_star;
    rec.errA_frob_sq = frobenius_norm_sq(da);
    rec.errB_frob_sq = frobenius_norm_sq(db);
    rec.errA_op = operator_norm(da);
    rec.errB_op = operator_norm(db);
    rec.errA_max = max_norm(da);
    rec.errB_max = max_norm(db);
}

}  // namespace

ErrorRecord run_trial_with_params(const TrialConfig& cfg, const ModelParameters& params,
                                  uint64_t seed) {
    ErrorRecord rec;
    rec.seed = seed;
    rec.sparse = cfg.sparse;
    try {
        const Dataset ds = generate_dataset(params, cfg.design, cfg.T, derive_seed(seed, kStreamData));
        const CHat ch = compute_c_hat(ds);
        const EstimatorOutput est = estimate_all(ch);
        rec.clip_count = est.clip_count;
        if (cfg.sparse) {
            const ThresholdSpec th =
                make_threshold_spec(cfg.sigma(), cfg.n, cfg.m, cfg.p, cfg.q, cfg.T, cfg.delta);
            const RealMatrix b_sparse = hard_threshold_b(est.b_hat, th.tau_b);
            const RealMatrix a_sparse = hard_threshold_a(est.a_hat, est.gamma_hat, th.tau_a);
            record_errors(rec, a_sparse, b_sparse, params);
            const auto b_true = support_of(params.B_star);
            const auto b_est = support_of(b_sparse);
            const auto a_true = support_of(params.A_star);
            const auto a_est = support_of(a_sparse);
            rec.b_support_true = static_cast<long>(b_true.size());
            rec.b_support_est = static_cast<long>(b_est.size());
            rec.a_support_true = static_cast<long>(a_true.size());
            rec.a_support_est = static_cast<long>(a_est.size());
            rec.b_support_match = b_true == b_est;
            rec.a_support_match = a_true == a_est;
        } else {
            record_errors(rec, est.a_hat, est.b_hat, params);
        }
    } catch (const Error& e) {
        rec.status = e.what();
    }
    return rec;
}

ErrorRecord run_trial(const TrialConfig& cfg, uint64_t seed) {
    try {
        const ModelParameters params = make_parameters(cfg, seed);
        return run_trial_with_params(cfg, params, seed);
    } catch (const Error& e) {
        ErrorRecord rec;
        rec.seed = seed;
        rec.sparse = cfg.sparse;
        rec.status = e.what();
        return rec;
    }
}

namespace {

TrialConfig apply_sweep_value(const TrialConfig& base, const std::string& name, double value) {
    TrialConfig cfg = base;
    auto as_positive_int = [&](const char* what) {
        if (value < 1.0 || value != std::floor(value)) {
            throw ConfigError(std::string("swept ") + what + " must be a positive integer, got " +
                              format_double(value));
        }
        return static_cast<int>(value);
    };
    if (name == "n") {
        cfg.n = as_positive_int("n");
    } else if (name == "m") {
        cfg.m = as_positive_int("m");
    } else if (name == "p") {
        cfg.p = as_positive_int("p");
    } else if (name == "q") {
        cfg.q = as_positive_int("q");
    } else if (name == "T") {
        if (value < 1.0 || value != std::floor(value)) {
            throw ConfigError("swept T must be a positive integer");
        }
        cfg.T = static_cast<long>(value);
    } else if (name == "sigma") {
        if (!(value > 0.0)) throw ConfigError("swept sigma must be positive");
        cfg.sigma_r = value;
        cfg.sigma_c = 1.0;
    } else {
        throw ConfigError("unknown sweep parameter: " + name);
    }
    return cfg;
}

}  // namespace

std::vector<ErrorRecord> run_sweep(const SweepSpec& spec) {
    if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
    if (spec.trials_per_point < 1) throw ConfigError("trials per point must be >= 1");
    std::vector<TrialConfig> configs;
    configs.reserve(spec.values.size());
    for (double v : spec.values) {
        configs.push_back(apply_sweep_value(spec.base, spec.param_name, v));
    }
    const long total = static_cast<long>(spec.values.size()) * spec.trials_per_point;
    std::vector<ErrorRecord> records(static_cast<size_t>(total));
    parallel_for(total, spec.jobs, [&](long idx) {
        const long point = idx / spec.trials_per_point;
        const long trial = idx % spec.trials_per_point;
        const uint64_t seed = derive_seed(spec.master_seed, static_cast<uint64_t>(point),
                                          static_cast<uint64_t>(trial));
        ErrorRecord rec = run_trial(configs[static_cast<size_t>(point)], seed);
        rec.param_name = spec.param_name;
        rec.param_value = spec.values[static_cast<size_t>(point)];
        rec.trial = static_cast<int>(trial);
        records[static_cast<size_t>(idx)] = std::move(rec);
    });
    return records;
}

std::vector<SummaryRow> aggregate_errors(const std::vector<ErrorRecord>& records) {
    if (records.empty()) throw ConfigError("aggregate_errors needs at least one record");

    struct Group {
        SummaryRow row;
        std::vector<const ErrorRecord*> ok;
    };
    std::vector<Group> groups;
    auto find_group = [&](const ErrorRecord& rec) -> Group& {
        for (Group& g : groups) {
            if (g.row.param_name == rec.param_name && g.row.param_value == rec.param_value) return g;
        }
        groups.emplace_back();
        groups.back().row.param_name = rec.param_name;
        groups.back().row.param_value = rec.param_value;
        return groups.back();
    };
    for (const ErrorRecord& rec : records) {
        Group& g = find_group(rec);
        if (rec.ok()) {
            g.ok.push_back(&rec);
        } else {
            ++g.row.failures;
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (Group& g : groups) {
        SummaryRow& row = g.row;
        row.count = static_cast<long>(g.ok.size());
        auto stats = [&](auto field, double& mean_out, double& std_out) {
            if (g.ok.empty()) {
                mean_out = nan;
                std_out = nan;
                return;
            }
            double mean = 0.0;
            for (const ErrorRecord* r : g.ok) mean += field(*r);
            mean /= static_cast<double>(g.ok.size());
            double var = 0.0;
            for (const ErrorRecord* r : g.ok) {
                const double d = field(*r) - mean;
                var += d * d;
            }
            var /= static_cast<double>(g.ok.size());  // population variance
            mean_out = mean;
            std_out = std::sqrt(var);
        };
        stats([](const ErrorRecord& r) { return r.errA_frob_sq; }, row.mean_errA_frob_sq,
              row.std_errA_frob_sq);
        stats([](const ErrorRecord& r) { return r.errB_frob_sq; }, row.mean_errB_frob_sq,
              row.std_errB_frob_sq);
        stats([](const ErrorRecord& r) { return r.errA_op; }, row.mean_errA_op, row.std_errA_op);
        stats([](const ErrorRecord& r) { return r.errB_op; }, row.mean_errB_op, row.std_errB_op);
        stats([](const ErrorRecord& r) { return r.errA_max; }, row.mean_errA_max, row.std_errA_max);
        stats([](const ErrorRecord& r) { return r.errB_max; }, row.mean_errB_max, row.std_errB_max);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bound coverage
// ---------------------------------------------------------------------------

namespace {

enum class BoundKind {
    BMax,
    BOp,
    BFrob,
    AMax,
    BSparseFrob,
    BSparseSupport,
    ASparseFrob,
    ASparseSupport,
    GaussMaxTail,
};

BoundKind bound_from_string(const std::string& name) {
    if (name == "B_max") return BoundKind::BMax;
    if (name == "B_op") return BoundKind::BOp;
    if (name == "B_frob") return BoundKind::BFrob;
    if (name == "A_max") return BoundKind::AMax;
    if (name == "B_sparse_frob") return BoundKind::BSparseFrob;
    if (name == "B_sparse_support") return BoundKind::BSparseSupport;
    if (name == "A_sparse_frob") return BoundKind::ASparseFrob;
    if (name == "A_sparse_support") return BoundKind::ASparseSupport;
    if (name == "gauss_max_tail") return BoundKind::GaussMaxTail;
    throw ConfigError("unknown bound name: " + name);
}

// Bisection for a strictly decreasing log-scale function.
double solve_decreasing(const std::function<double(double)>& log_fn, double log_target,
                        double lo, double hi_start) {
    double hi = hi_start;
    if (!(log_fn(lo) > log_target)) {
        throw ConfigError("bound RHS never reaches the target at the bracket floor");
    }
    int expand = 0;
    while (log_fn(hi) > log_target) {
        hi *= 2.0;
        if (++expand > 64) throw ConfigError("bound RHS bracket expansion failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (log_fn(mid) > log_target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-14 * hi) break;
    }
    return 0.5 * (lo + hi);
}

struct PointContext {
    BoundKind kind = BoundKind::BMax;
    TrialConfig cfg;
    ModelParameters params;
    uint64_t point_seed = 0;
    FlatIndexMap map;
    std::shared_ptr<QrSolver> solver;
    RealMatrix signal;  // T x np
    double epsilon = 0.0;
    double event_threshold = 0.0;
    double tau = 0.0;
    double budget = 0.0;
    double lower = 0.0, upper = 0.0;  // gauss tail bracket
    std::string params_desc;
};

std::string describe_point(const TrialConfig& cfg, BoundKind kind) {
    std::ostringstream os;
    if (kind == BoundKind::GaussMaxTail) {
        os << "n=" << cfg.n;
        return os.str();
    }
    os << "n=" << cfg.n << ";m=" << cfg.m << ";p=" << cfg.p << ";q=" << cfg.q << ";T=" << cfg.T
       << ";sigma=" << format_double(cfg.sigma());
    return os.str();
}

PointContext make_point_context(BoundKind kind, const TrialConfig& cfg_in, double delta,
                                uint64_t point_seed) {
    PointContext ctx;
    ctx.kind = kind;
    ctx.cfg = cfg_in;
    ctx.point_seed = point_seed;
    ctx.params_desc = describe_point(cfg_in, kind);
    const double pi = std::numbers::pi;

    if (kind == BoundKind::GaussMaxTail) {
        const double n = static_cast<double>(cfg_in.n);
        const double inner = std::log(n / 2.0) - std::log(std::log(2.0 / delta));
        if (!(inner > 0.0)) {
            throw ConfigError("gauss_max_tail: lower bracket undefined, needs log(n/2) > "
                              "log(log(2/delta))");
        }
        ctx.lower = std::sqrt(pi / 2.0 * inner);
        ctx.upper = std::sqrt(2.0) * (std::sqrt(std::log(2.0 * n)) + std::sqrt(std::log(2.0 / delta)));
        ctx.budget = delta;
        return ctx;
    }

    TrialConfig cfg = cfg_in;
    cfg.design = DesignKind::OrthogonalScaled;  // the bounds assume the ORT design
    const double sigma = cfg.sigma();
    if (!(sigma > 0.0)) throw ConfigError("bound coverage needs sigma > 0");
    const double n = cfg.n, m = cfg.m, p = cfg.p, q = cfg.q, T = static_cast<double>(cfg.T);

    // Ground truth per bound family.
    if (kind == BoundKind::BSparseFrob || kind == BoundKind::BSparseSupport) {
        if (cfg.gen.b_sparse_magnitude == 0.0) {
            cfg.gen.b_sparse_magnitude =
                4.0 * threshold_tau_b(sigma, cfg.m, cfg.n, cfg.T, cfg.p, cfg.q, delta);
        }
    }
    if (kind == BoundKind::ASparseFrob || kind == BoundKind::ASparseSupport) {
        if (cfg.gen.a_row_nonzeros == 0) cfg.gen.a_row_nonzeros = std::max(1, cfg.m / 2);
    }
    ctx.cfg = cfg;
    ctx.params = make_parameters(cfg, point_seed);

    const RealMatrix& a_star = ctx.params.A_star;
    const RealMatrix& b_star = ctx.params.B_star;
    double beta_star = 0.0;
    for (double v : b_star.data()) beta_star += v;
    beta_star /= (p * q);

    switch (kind) {
        case BoundKind::BMax: {
            auto log_rhs = [&](double eps) {
                return std::log(p * q * sigma) - std::log(eps) +
                       0.5 * std::log(2.0 * m / (T * n * pi)) -
                       T * n * eps * eps / (2.0 * m * sigma * sigma);
            };
            ctx.epsilon = solve_decreasing(log_rhs, std::log(delta), 1e-14, sigma);
            ctx.budget = delta;
            break;
        }
        case BoundKind::BOp: {
            ctx.epsilon = 2.0 * sigma * std::sqrt(m) / std::sqrt(n * T) *
                          (std::sqrt(std::log(2.0 / delta)) + 0.5 * (std::sqrt(p) + std::sqrt(q)));
            ctx.budget = delta;
            break;
        }
        case BoundKind::BFrob: {
            ctx.epsilon =
                3.0 * m * sigma * sigma / (T * n) * (std::log(2.0 / delta) + 2.0 * p * q / 3.0);
            ctx.budget = delta;
            break;
        }
        case BoundKind::AMax: {
            if (cfg.n < 2) throw ConfigError("A bound assumption violated: n >= 2");
            if (!(beta_star > 0.0)) {
                throw ConfigError("A bound assumption violated: beta* > 0 (average B entry)");
            }
            double a_min = 1.0, a_max = 0.0;
            for (double v : a_star.data()) {
                a_min = std::min(a_min, v);
                a_max = std::max(a_max, v);
            }
            if (!(a_min > 0.0 && a_max < 1.0)) {
                throw ConfigError("A bound assumption violated: 0 < A* entries < 1 strictly");
            }
            const double mu = beta_star * (1.0 - a_max);
            const double nu = beta_star * a_min;
            const double sigma_tilde = sigma * std::sqrt(1.0 + m / (n - 1.0));
            const double tpq = T * p * q;
            const double constant =
                n * m / std::sqrt(2.0 * p * q * T * pi) *
                (sigma_tilde * std::exp(-tpq * mu * mu / (2.0 * sigma_tilde * sigma_tilde)) / mu +
                 sigma * std::exp(-tpq * nu * nu / (2.0 * sigma * sigma)) / nu);
            if (!(constant < delta)) {
                throw ConfigError("A bound: clip-event term " + format_double(constant) +
                                  " already exceeds the budget; increase T or p*q");
            }
            auto log_term = [&](double eps) {
                const double la = -tpq * eps * eps / (2.0 * sigma * sigma);
                const double lb = 0.5 * std::log(m / (n - 1.0)) -
                                  tpq * (n - 1.0) * eps * eps / (2.0 * m * sigma * sigma);
                const double hi = std::max(la, lb);
                const double sum = hi + std::log1p(std::exp(std::min(la, lb) - hi));
                return std::log(n * m * sigma * std::sqrt(2.0)) - std::log(eps) -
                       0.5 * std::log(p * q * T * pi) + sum;
            };
            ctx.epsilon = solve_decreasing(log_term, std::log(delta - constant), 1e-14, sigma);
            ctx.event_threshold = 2.0 * ctx.epsilon / std::fabs(beta_star);
            ctx.budget = delta;
            break;
        }
        case BoundKind::BSparseFrob:
        case BoundKind::BSparseSupport: {
            ctx.tau = threshold_tau_b(sigma, cfg.m, cfg.n, cfg.T, cfg.p, cfg.q, delta);
            double b_min = std::numeric_limits<double>::infinity();
            long b_zero_count = 0;
            for (double v : b_star.data()) {
                if (v != 0.0) {
                    b_min = std::min(b_min, std::fabs(v));
                } else {
                    ++b_zero_count;
                }
            }
            const long b0 = static_cast<long>(b_star.data().size()) - b_zero_count;
            if (kind == BoundKind::BSparseSupport && !(b_min > 3.0 * ctx.tau)) {
                throw ConfigError("B sparse support assumption violated: min |B*| > 3*tau");
            }
            ctx.event_threshold = 16.0 * static_cast<double>(b0) * ctx.tau * ctx.tau;
            ctx.budget = delta;
            break;
        }
        case BoundKind::ASparseFrob:
        case BoundKind::ASparseSupport: {
            if (cfg.n < 2) throw ConfigError("A bound assumption violated: n >= 2");
            ctx.tau = threshold_tau_a(sigma, cfg.T, cfg.p, cfg.q, cfg.n, cfg.m, delta);
            const double tdelta = solve_t_delta(sigma, cfg.m, cfg.n, cfg.p, cfg.q, cfg.T, delta);
            double a_min_nz = std::numeric_limits<double>::infinity();
            long a0 = 0;
            for (double v : a_star.data()) {
                if (v != 0.0) {
                    a_min_nz = std::min(a_min_nz, std::fabs(v));
                    ++a0;
                }
            }
            if (kind == BoundKind::ASparseSupport) {
                if (!(3.0 * beta_star > 1.0)) {
                    throw ConfigError("A sparse support assumption violated: 3*beta* > 1");
                }
                if (!(a_min_nz > 3.0 * ctx.tau)) {
                    throw ConfigError("A sparse support assumption violated: min |A*| > 3*tau");
                }
            }
            const double bound = (2.0 * tdelta + 3.0 * ctx.tau);
            ctx.event_threshold =
                static_cast<double>(a0) * bound * bound / (beta_star * beta_star);
            ctx.budget = 2.0 * delta;
            break;
        }
        default:
            break;
    }

    // Fixed ORT design and signal rows, factored once per point.
    const std::vector<RealMatrix> design = generate_design(
        DesignKind::OrthogonalScaled, cfg.m, cfg.q, cfg.T, derive_seed(point_seed, kStreamDesign));
    const int mq = cfg.m * cfg.q;
    const int np = cfg.n * cfg.p;
    RealMatrix x(static_cast<int>(cfg.T), mq);
    ctx.signal = RealMatrix(static_cast<int>(cfg.T), np);
    for (long t = 0; t < cfg.T; ++t) {
        const std::vector<double> xr = vectorize(design[static_cast<size_t>(t)]);
        for (int c = 0; c < mq; ++c) x(static_cast<int>(t), c) = xr[static_cast<size_t>(c)];
        const std::vector<double> mr = vectorize(forward_map(ctx.params, design[static_cast<size_t>(t)]));
        for (int c = 0; c < np; ++c) ctx.signal(static_cast<int>(t), c) = mr[static_cast<size_t>(c)];
    }
    ctx.solver = std::make_shared<QrSolver>(x);
    ctx.map = FlatIndexMap{cfg.m, cfg.q, cfg.n, cfg.p};
    return ctx;
}

bool coverage_event(const PointContext& ctx, uint64_t trial_seed) {
    if (ctx.kind == BoundKind::GaussMaxTail) {
        RandomStream rs(trial_seed);
        double max_abs = 0.0;
        for (int i = 0; i < ctx.cfg.n; ++i) max_abs = std::max(max_abs, std::fabs(rs.gaussian()));
        return max_abs < ctx.lower || max_abs > ctx.upper;
    }

    const double sigma = ctx.cfg.sigma();
    RealMatrix y = ctx.signal;
    RandomStream rs(trial_seed);
    for (double& v : y.data()) v += sigma * rs.gaussian();
    const CHat ch{ctx.solver->solve(y), ctx.map};

    switch (ctx.kind) {
        case BoundKind::BMax:
            return max_norm(estimate_b_hat(ch) - ctx.params.B_star) > ctx.epsilon;
        case BoundKind::BOp:
            return operator_norm(estimate_b_hat(ch) - ctx.params.B_star) > ctx.epsilon;
        case BoundKind::BFrob:
            return frobenius_norm_sq(estimate_b_hat(ch) - ctx.params.B_star) > ctx.epsilon;
        case BoundKind::AMax: {
            const AHat a = estimate_a_hat(estimate_a_tilde(ch).values);
            return max_norm(a.values - ctx.params.A_star) > ctx.event_threshold;
        }
        case BoundKind::BSparseFrob: {
            const RealMatrix bs = hard_threshold_b(estimate_b_hat(ch), ctx.tau);
            return frobenius_norm_sq(bs - ctx.params.B_star) >= ctx.event_threshold;
        }
        case BoundKind::BSparseSupport: {
            const RealMatrix bs = hard_threshold_b(estimate_b_hat(ch), ctx.tau);
            return support_of(bs) != support_of(ctx.params.B_star);
        }
        case BoundKind::ASparseFrob: {
            const RealMatrix gamma = compute_gamma_hat(ch);
            const AHat a = estimate_a_hat(estimate_a_tilde(ch).values);
            const RealMatrix as = hard_threshold_a(a.values, gamma, ctx.tau);
            return frobenius_norm_sq(as - ctx.params.A_star) > ctx.event_threshold;
        }
        case BoundKind::ASparseSupport: {
            const RealMatrix gamma = compute_gamma_hat(ch);
            const AHat a = estimate_a_hat(estimate_a_tilde(ch).values);
            const RealMatrix as = hard_threshold_a(a.values, gamma, ctx.tau);
            return support_of(as) != support_of(ctx.params.A_star);
        }
        default:
            return false;
    }
}

}  // namespace

std::vector<CoverageReport> verify_bound_coverage(const std::string& bound,
                                                  const std::vector<TrialConfig>& grid,
                                                  long trials, double delta, uint64_t master_seed,
                                                  int jobs) {
    const BoundKind kind = bound_from_string(bound);
    if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (trials < 1) throw ConfigError("coverage needs trials >= 1");
    if (grid.empty()) throw ConfigError("coverage needs a nonempty config grid");

    std::vector<CoverageReport> reports;
    reports.reserve(grid.size());
    for (size_t gi = 0; gi < grid.size(); ++gi) {
        const PointContext ctx = make_point_context(
            kind, grid[gi], delta, derive_seed(master_seed, 0xC0DE, static_cast<uint64_t>(gi)));
        std::vector<uint8_t> failed(static_cast<size_t>(trials), 0);
        parallel_for(trials, jobs, [&](long ti) {
            const uint64_t seed = derive_seed(ctx.point_seed, 0xE7, static_cast<uint64_t>(ti));
            failed[static_cast<size_t>(ti)] = coverage_event(ctx, seed) ? 1 : 0;
        });
        long count = 0;
        for (uint8_t f : failed) count += f;
        CoverageReport rep;
        rep.bound = bound;
        rep.params = ctx.params_desc;
        rep.budget = ctx.budget;
        rep.empirical = static_cast<double>(count) / static_cast<double>(trials);
        rep.trials = trials;
        rep.slack = 2.0 * std::sqrt(rep.budget * (1.0 - rep.budget) / static_cast<double>(trials));
        rep.pass = rep.empirical <= rep.budget + rep.slack;
        reports.push_back(std::move(rep));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

OutputFormat format_from_string(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format: " + name);
}

std::string to_string(OutputFormat fmt) { return fmt == OutputFormat::Csv ? "csv" : "json"; }

namespace {

std::string sanitize_field(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

void write_csv_meta(std::ofstream& out, const RunMetadata& meta, bool population_note) {
    out << "# bmlr " << BMLR_VERSION << "\n";
    if (!meta.command.empty()) out << "# command=" << meta.command << "\n";
    if (!meta.config_json.empty()) out << "# config=" << meta.config_json << "\n";
    out << "# seed=" << meta.seed << "\n";
    if (meta.failures >= 0) out << "# failures=" << meta.failures << "\n";
    if (population_note) out << "# std=population\n";
}

nlohmann::json meta_json(const RunMetadata& meta) {
    nlohmann::json j{{"tool", std::string("bmlr ") + BMLR_VERSION}, {"seed", meta.seed}};
    if (!meta.command.empty()) j["command"] = meta.command;
    if (!meta.config_json.empty()) j["config"] = nlohmann::json::parse(meta.config_json);
    if (meta.failures >= 0) j["failures"] = meta.failures;
    return j;
}

nlohmann::json record_json(const ErrorRecord& r) {
    nlohmann::json j{{"param_name", r.param_name},
                     {"param_value", r.param_value},
                     {"trial", r.trial},
                     {"seed", r.seed},
                     {"errA_frob_sq", r.errA_frob_sq},
                     {"errB_frob_sq", r.errB_frob_sq},
                     {"errA_op", r.errA_op},
                     {"errB_op", r.errB_op},
                     {"errA_max", r.errA_max},
                     {"errB_max", r.errB_max},
                     {"clip_count", r.clip_count},
                     {"status", r.status}};
    if (r.sparse) {
        j["b_support_true"] = r.b_support_true;
        j["b_support_est"] = r.b_support_est;
        j["a_support_true"] = r.a_support_true;
        j["a_support_est"] = r.a_support_est;
        j["b_support_match"] = r.b_support_match;
        j["a_support_match"] = r.a_support_match;
    }
    return j;
}

}  // namespace

void emit_results(const std::vector<ErrorRecord>& records, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta) {
    std::ofstream out = open_output(path);
    if (fmt == OutputFormat::Csv) {
        write_csv_meta(out, meta, false);
        out << "param_name,param_value,trial,seed,errA_frob_sq,errB_frob_sq,errA_op,errB_op,"
               "errA_max,errB_max,clip_count,status\n";
        for (const ErrorRecord& r : records) {
            out << sanitize_field(r.param_name) << ',' << format_double(r.param_value) << ','
                << r.trial << ',' << r.seed << ',' << format_double(r.errA_frob_sq) << ','
                << format_double(r.errB_frob_sq) << ',' << format_double(r.errA_op) << ','
                << format_double(r.errB_op) << ',' << format_double(r.errA_max) << ','
                << format_double(r.errB_max) << ',' << r.clip_count << ','
                << sanitize_field(r.status) << "\n";
        }
    } else {
        nlohmann::json j{{"meta", meta_json(meta)}};
        nlohmann::json arr = nlohmann::json::array();
        for (const ErrorRecord& r : records) arr.push_back(record_json(r));
        j["records"] = std::move(arr);
        out << j.dump(2) << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void emit_results(const std::vector<SummaryRow>& rows, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta) {
    std::ofstream out = open_output(path);
    if (fmt == OutputFormat::Csv) {
        write_csv_meta(out, meta, true);
        out << "param_name,param_value,count,failures,mean_errA_frob_sq,std_errA_frob_sq,"
               "mean_errB_frob_sq,std_errB_frob_sq,mean_errA_op,std_errA_op,mean_errB_op,"
               "std_errB_op,mean_errA_max,std_errA_max,mean_errB_max,std_errB_max\n";
        for (const SummaryRow& r : rows) {
            out << sanitize_field(r.param_name) << ',' << format_double(r.param_value) << ','
                << r.count << ',' << r.failures << ',' << format_double(r.mean_errA_frob_sq) << ','
                << format_double(r.std_errA_frob_sq) << ',' << format_double(r.mean_errB_frob_sq)
                << ',' << format_double(r.std_errB_frob_sq) << ',' << format_double(r.mean_errA_op)
                << ',' << format_double(r.std_errA_op) << ',' << format_double(r.mean_errB_op)
                << ',' << format_double(r.std_errB_op) << ',' << format_double(r.mean_errA_max)
                << ',' << format_double(r.std_errA_max) << ',' << format_double(r.mean_errB_max)
                << ',' << format_double(r.std_errB_max) << "\n";
        }
    } else {
        nlohmann::json j{{"meta", meta_json(meta)}, {"std", "population"}};
        nlohmann::json arr = nlohmann::json::array();
        for (const SummaryRow& r : rows) {
            arr.push_back(nlohmann::json{{"param_name", r.param_name},
                                         {"param_value", r.param_value},
                                         {"count", r.count},
                                         {"failures", r.failures},
                                         {"mean_errA_frob_sq", r.mean_errA_frob_sq},
                                         {"std_errA_frob_sq", r.std_errA_frob_sq},
                                         {"mean_errB_frob_sq", r.mean_errB_frob_sq},
                                         {"std_errB_frob_sq", r.std_errB_frob_sq},
                                         {"mean_errA_op", r.mean_errA_op},
                                         {"std_errA_op", r.std_errA_op},
                                         {"mean_errB_op", r.mean_errB_op},
                                         {"std_errB_op", r.std_errB_op},
                                         {"mean_errA_max", r.mean_errA_max},
                                         {"std_errA_max", r.std_errA_max},
                                         {"mean_errB_max", r.mean_errB_max},
                                         {"std_errB_max", r.std_errB_max}});
        }
        j["summaries"] = std::move(arr);
        out << j.dump(2) << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void emit_results(const std::vector<CoverageReport>& reports, const std::filesystem::path& path,
                  OutputFormat fmt, const RunMetadata& meta) {
    std::ofstream out = open_output(path);
    if (fmt == OutputFormat::Csv) {
        write_csv_meta(out, meta, false);
        out << "bound,params,budget,empirical_failure,trials,slack,pass\n";
        for (const CoverageReport& r : reports) {
            out << sanitize_field(r.bound) << ',' << sanitize_field(r.params) << ','
                << format_double(r.budget) << ',' << format_double(r.empirical) << ',' << r.trials
                << ',' << format_double(r.slack) << ',' << (r.pass ? "true" : "false") << "\n";
        }
    } else {
        nlohmann::json j{{"meta", meta_json(meta)}};
        nlohmann::json arr = nlohmann::json::array();
        for (const CoverageReport& r : reports) {
            arr.push_back(nlohmann::json{{"bound", r.bound},
                                         {"params", r.params},
                                         {"budget", r.budget},
                                         {"empirical_failure", r.empirical},
                                         {"trials", r.trials},
                                         {"slack", r.slack},
                                         {"pass", r.pass}});
        }
        j["coverage"] = std::move(arr);
        out << j.dump(2) << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ErrorRecord> parse_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<ErrorRecord> records;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        std::vector<std::string> fields;
        size_t pos = 0;
        for (int f = 0; f < 11; ++f) {
            const size_t comma = line.find(',', pos);
            if (comma == std::string::npos) throw IoError("malformed CSV row in " + path.string());
            fields.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        fields.push_back(line.substr(pos));  // status, rest of line
        ErrorRecord r;
        r.param_name = fields[0];
        r.param_value = std::stod(fields[1]);
        r.trial = std::stoi(fields[2]);
        r.seed = std::stoull(fields[3]);
        r.errA_frob_sq = std::stod(fields[4]);
        r.errB_frob_sq = std::stod(fields[5]);
        r.errA_op = std::stod(fields[6]);
        r.errB_op = std::stod(fields[7]);
        r.errA_max = std::stod(fields[8]);
        r.errB_max = std::stod(fields[9]);
        r.clip_count = std::stoi(fields[10]);
        r.status = fields[11];
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace bmlr
