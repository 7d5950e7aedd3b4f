#include "bmlr/estimators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bmlr {

namespace {

constexpr double kDenomGuard = 1e-12;

void check_delta(double delta) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ConfigError("delta must lie in (0, 1), got " + std::to_string(delta));
    }
}

}  // namespace

CHat compute_c_hat(const Dataset& ds) {
    const int m = ds.dims.m;
    const int q = ds.dims.q;
    const int n = ds.dims.n;
    const int p = ds.dims.p;
    const long T = ds.dims.T;
    const long mq = static_cast<long>(m) * q;
    if (T < mq) {
        throw ConfigError("compute_c_hat needs T >= m*q, got T = " + std::to_string(T));
    }
    RealMatrix x(static_cast<int>(T), static_cast<int>(mq));
    RealMatrix y(static_cast<int>(T), n * p);
    for (long t = 0; t < T; ++t) {
        const std::vector<double> xr = vectorize(ds.predictors[static_cast<size_t>(t)]);
        const std::vector<double> yr = vectorize(ds.responses[static_cast<size_t>(t)]);
        for (size_t c = 0; c < xr.size(); ++c) x(static_cast<int>(t), static_cast<int>(c)) = xr[c];
        for (size_t c = 0; c < yr.size(); ++c) y(static_cast<int>(t), static_cast<int>(c)) = yr[c];
    }
    return CHat{least_squares_solve(x, y), FlatIndexMap{m, q, n, p}};
}

CanonicalRecovery recover_noiseless_canonical(const std::vector<RealMatrix>& observations, int m,
                                              int q) {
    const long mq = static_cast<long>(m) * q;
    if (static_cast<long>(observations.size()) != mq) {
        throw DimensionError("canonical recovery expects exactly m*q observations");
    }
    const int n = observations[0].rows();
    const int p = observations[0].cols();
    for (const RealMatrix& obs : observations) {
        if (obs.rows() != n || obs.cols() != p) {
            throw DimensionError("canonical recovery: inconsistent observation dims");
        }
    }

    // B(l,j) from row i = 0, then verify every other row agrees.
    RealMatrix b(q, p);
    double spread = 0.0;
    for (int l = 0; l < q; ++l) {
        for (int j = 0; j < p; ++j) {
            double first = 0.0;
            for (int i = 0; i < n; ++i) {
                double sum = 0.0;
                for (int k = 0; k < m; ++k) {
                    sum += observations[static_cast<size_t>(k) + static_cast<size_t>(l) * m](i, j);
                }
                if (i == 0) {
                    first = sum;
                } else {
                    spread = std::max(spread, std::fabs(sum - first));
                }
            }
            b(l, j) = first;
        }
    }
    if (spread > 1e-9) {
        throw UnrecoverableError(
            "canonical recovery: observations are inconsistent with the noiseless model "
            "(row spread " + std::to_string(spread) + ")");
    }

    // Pick the largest-magnitude B entry as the divisor.
    int best_l = -1, best_j = -1;
    double best = 0.0;
    for (int l = 0; l < q; ++l) {
        for (int j = 0; j < p; ++j) {
            if (std::fabs(b(l, j)) > best) {
                best = std::fabs(b(l, j));
                best_l = l;
                best_j = j;
            }
        }
    }
    if (best_l < 0) {
        throw UnrecoverableError("canonical recovery: every B entry is zero, A is unrecoverable");
    }

    RealMatrix a(n, m);
    const double divisor = b(best_l, best_j);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k) {
            a(i, k) =
                observations[static_cast<size_t>(k) + static_cast<size_t>(best_l) * m](i, best_j) /
                divisor;
        }
    }
    return CanonicalRecovery{std::move(a), std::move(b), spread};
}

std::pair<RealMatrix, RealMatrix> recover_noiseless_general(const CHat& c) {
    const FlatIndexMap& ix = c.index;
    RealMatrix b(ix.q, ix.p);
    for (int l = 0; l < ix.q; ++l) {
        for (int j = 0; j < ix.p; ++j) {
            double sum = 0.0;
            for (int i = 0; i < ix.n; ++i) {
                for (int k = 0; k < ix.m; ++k) {
                    sum += c.matrix(ix.row_index(k, l), ix.col_index(i, j));
                }
            }
            b(l, j) = sum / static_cast<double>(ix.n);
        }
    }

    // Usable divisor set: (j,l) with B(l,j) != 0.
    double denom = 0.0;
    bool any = false;
    for (int l = 0; l < ix.q; ++l) {
        for (int j = 0; j < ix.p; ++j) {
            if (b(l, j) != 0.0) {
                denom += b(l, j);
                any = true;
            }
        }
    }
    if (!any) throw DegenerateBError("general recovery: B has no nonzero entries");
    if (denom == 0.0) {
        throw DegenerateBError("general recovery: nonzero B entries cancel to a zero divisor sum");
    }

    RealMatrix a(ix.n, ix.m);
    for (int i = 0; i < ix.n; ++i) {
        for (int k = 0; k < ix.m; ++k) {
            double numer = 0.0;
            for (int l = 0; l < ix.q; ++l) {
                for (int j = 0; j < ix.p; ++j) {
                    if (b(l, j) != 0.0) {
                        numer += c.matrix(ix.row_index(k, l), ix.col_index(i, j));
                    }
                }
            }
            a(i, k) = numer / denom;
        }
    }
    return {std::move(a), std::move(b)};
}

RealMatrix estimate_b_hat(const CHat& c) {
    const FlatIndexMap& ix = c.index;
    RealMatrix b(ix.q, ix.p);
    for (int l = 0; l < ix.q; ++l) {
        for (int j = 0; j < ix.p; ++j) {
            double sum = 0.0;
            for (int i = 0; i < ix.n; ++i) {
                for (int k = 0; k < ix.m; ++k) {
                    sum += c.matrix(ix.row_index(k, l), ix.col_index(i, j));
                }
            }
            b(l, j) = sum / static_cast<double>(ix.n);
        }
    }
    return b;
}

RealMatrix compute_gamma_hat(const CHat& c) {
    const FlatIndexMap& ix = c.index;
    RealMatrix gamma(ix.n, ix.m);
    for (int k = 0; k < ix.m; ++k) {
        for (int l = 0; l < ix.q; ++l) {
            const int row = ix.row_index(k, l);
            for (int j = 0; j < ix.p; ++j) {
                for (int i = 0; i < ix.n; ++i) {
                    gamma(i, k) += c.matrix(row, ix.col_index(i, j));
                }
            }
        }
    }
    const double scale = 1.0 / (static_cast<double>(ix.p) * ix.q);
    for (double& v : gamma.data()) v *= scale;
    return gamma;
}

ATilde estimate_a_tilde(const CHat& c) {
    const FlatIndexMap& ix = c.index;
    if (ix.n < 2) throw ConfigError("estimate_a_tilde needs n >= 2 (leave-one-out denominator)");
    const double pq = static_cast<double>(ix.p) * ix.q;

    const RealMatrix gamma = compute_gamma_hat(c);

    // S(r) = sum over all (s,l,j) of C-hat((s,l),(r,j)) = pq * row sums of gamma.
    std::vector<double> row_total(static_cast<size_t>(ix.n), 0.0);
    double grand_total = 0.0;
    for (int i = 0; i < ix.n; ++i) {
        double s = 0.0;
        for (int k = 0; k < ix.m; ++k) s += gamma(i, k);
        row_total[static_cast<size_t>(i)] = pq * s;
        grand_total += pq * s;
    }

    ATilde out;
    out.values = RealMatrix(ix.n, ix.m);
    out.beta_hat_loo.resize(static_cast<size_t>(ix.n));
    for (int i = 0; i < ix.n; ++i) {
        const double denominator = (grand_total - row_total[static_cast<size_t>(i)]) /
                                   static_cast<double>(ix.n - 1);
        out.beta_hat_loo[static_cast<size_t>(i)] = denominator / pq;
        if (std::fabs(denominator) < kDenomGuard) {
            for (int k = 0; k < ix.m; ++k) {
                out.values(i, k) = std::numeric_limits<double>::quiet_NaN();
                out.denom_warnings.emplace_back(i, k);
            }
            continue;
        }
        for (int k = 0; k < ix.m; ++k) {
            out.values(i, k) = pq * gamma(i, k) / denominator;
        }
    }
    return out;
}

AHat estimate_a_hat(const RealMatrix& a_tilde) {
    AHat out;
    out.values = a_tilde;
    for (double& v : out.values.data()) {
        if (std::isnan(v)) {
            v = 0.0;
            ++out.clip_count;
        } else if (v < 0.0) {
            v = 0.0;
            ++out.clip_count;
        } else if (v > 1.0) {
            v = 1.0;
            ++out.clip_count;
        }
    }
    return out;
}

double threshold_tau_b(double sigma, int m, int n, long T, int p, int q, double delta) {
    if (sigma < 0.0) throw ConfigError("sigma must be nonnegative");
    if (m < 1 || n < 1 || p < 1 || q < 1 || T < 1) throw ConfigError("threshold dims must be >= 1");
    check_delta(delta);
    return sigma * std::sqrt(2.0 * m / (static_cast<double>(n) * T)) *
           (std::sqrt(std::log(2.0 * p * q)) + std::sqrt(std::log(2.0 / delta)));
}

double threshold_tau_a(double sigma, long T, int p, int q, int n, int m, double delta) {
    if (sigma < 0.0) throw ConfigError("sigma must be nonnegative");
    if (m < 1 || n < 1 || p < 1 || q < 1 || T < 1) throw ConfigError("threshold dims must be >= 1");
    check_delta(delta);
    return sigma * std::sqrt(2.0 / (static_cast<double>(T) * p * q)) *
           (std::sqrt(std::log(2.0 * n * m)) + std::sqrt(std::log(2.0 / delta)));
}

RealMatrix hard_threshold_b(const RealMatrix& b_hat, double tau) {
    if (tau < 0.0) throw ConfigError("tau must be nonnegative");
    RealMatrix out = b_hat;
    for (double& v : out.data()) {
        if (!(std::fabs(v) > 2.0 * tau)) v = 0.0;
    }
    return out;
}

RealMatrix hard_threshold_a(const RealMatrix& a_hat, const RealMatrix& gamma_hat, double tau) {
    if (tau < 0.0) throw ConfigError("tau must be nonnegative");
    if (a_hat.rows() != gamma_hat.rows() || a_hat.cols() != gamma_hat.cols()) {
        throw DimensionError("hard_threshold_a: A and gamma dims differ");
    }
    RealMatrix out = a_hat;
    for (int i = 0; i < out.rows(); ++i) {
        for (int k = 0; k < out.cols(); ++k) {
            if (!(std::fabs(gamma_hat(i, k)) > 2.0 * tau)) out(i, k) = 0.0;
        }
    }
    return out;
}

namespace {

// log of the two-term tail function, evaluated without underflow.
double log_tail_sum(double sigma, int m, int n, int p, int q, long T, double t) {
    const double pi = std::numbers::pi;
    const double tpq = static_cast<double>(T) * p * q;
    const double la = std::log(sigma) + 0.5 * std::log(2.0 * m) - std::log(t) -
                      0.5 * std::log(static_cast<double>(n) * p * q * T * pi) -
                      tpq * t * t / (2.0 * m * sigma * sigma);
    const double lb = std::log(sigma) + 0.5 * std::log(2.0) - std::log(t) -
                      0.5 * std::log(static_cast<double>(p) * q * T * pi) -
                      tpq * t * t / (2.0 * sigma * sigma);
    const double hi = std::max(la, lb);
    const double lo = std::min(la, lb);
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

double solve_t_delta(double sigma, int m, int n, int p, int q, long T, double delta) {
    if (!(sigma > 0.0)) throw ConfigError("solve_t_delta: sigma must be positive");
    if (m < 1 || n < 1 || p < 1 || q < 1 || T < 1) throw ConfigError("solve_t_delta: dims must be >= 1");
    check_delta(delta);

    const double log_delta = std::log(delta);
    double lo = 1e-12 * sigma;
    double hi = 10.0 * sigma * std::sqrt(static_cast<double>(m)) *
                std::max(1.0, std::sqrt(std::log(1.0 / delta)));

    if (!(log_tail_sum(sigma, m, n, p, q, T, lo) > log_delta)) {
        throw ConfigError("solve_t_delta: no root above the bracket floor (numeric underflow at "
                          "extreme parameters)");
    }
    int expand = 0;
    while (log_tail_sum(sigma, m, n, p, q, T, hi) > log_delta) {
        hi *= 2.0;
        if (++expand > 64) throw ConfigError("solve_t_delta: bracket expansion failed");
    }

    // The tail function is strictly decreasing on (0, inf); bisect to fp limits.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (log_tail_sum(sigma, m, n, p, q, T, mid) > log_delta) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::pair<int, int>> support_of(const RealMatrix& m, double zero_tol) {
    if (zero_tol < 0.0) throw ConfigError("zero_tol must be nonnegative");
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            if (std::fabs(m(r, c)) > zero_tol) out.emplace_back(r, c);
        }
    }
    return out;
}

EstimatorOutput estimate_all(const CHat& c) {
    EstimatorOutput out;
    out.b_hat = estimate_b_hat(c);
    out.gamma_hat = compute_gamma_hat(c);
    ATilde at = estimate_a_tilde(c);
    out.a_tilde = std::move(at.values);
    out.beta_hat_loo = std::move(at.beta_hat_loo);
    out.denom_warnings = std::move(at.denom_warnings);
    AHat ah = estimate_a_hat(out.a_tilde);
    out.a_hat = std::move(ah.values);
    out.clip_count = ah.clip_count;
    return out;
}

ThresholdSpec make_threshold_spec(double sigma, int n, int m, int p, int q, long T, double delta) {
    check_delta(delta);
    ThresholdSpec spec;
    spec.delta = delta;
    if (sigma == 0.0) return spec;
    spec.tau_b = threshold_tau_b(sigma, m, n, T, p, q, delta);
    spec.tau_a = threshold_tau_a(sigma, T, p, q, n, m, delta);
    spec.t_delta = solve_t_delta(sigma, m, n, p, q, T, delta);
    return spec;
}

}  // namespace bmlr
