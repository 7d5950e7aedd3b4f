#include "bmlr/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bmlr {

OrtReport check_ort(const RealMatrix& x, double tol) {
    const int t = x.rows();
    const int d = x.cols();
    if (t < d) throw DimensionError("check_ort: T < d");
    double dev = 0.0;
    for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
            double s = 0.0;
            for (int r = 0; r < t; ++r) s += x(r, a) * x(r, b);
            s /= static_cast<double>(t);
            const double target = (a == b) ? 1.0 : 0.0;
            dev = std::max(dev, std::fabs(s - target));
        }
    }
    return OrtReport{dev <= tol, dev};
}

QrSolver::QrSolver(const RealMatrix& x, double rank_tol) : t_(x.rows()), d_(x.cols()) {
    if (t_ < d_) {
        throw DimensionError("least squares needs T >= d, got " + std::to_string(t_) + " x " +
                             std::to_string(d_));
    }
    factor_.resize(static_cast<size_t>(t_) * d_);
    for (int c = 0; c < d_; ++c) {
        for (int r = 0; r < t_; ++r) factor_[static_cast<size_t>(c) * t_ + r] = x(r, c);
    }
    beta_.assign(d_, 0.0);
    diag_.assign(d_, 0.0);

    for (int j = 0; j < d_; ++j) {
        double* col = &factor_[static_cast<size_t>(j) * t_];
        double sigma = 0.0;
        for (int r = j + 1; r < t_; ++r) sigma += col[r] * col[r];
        const double x1 = col[j];
        if (sigma == 0.0) {
            beta_[j] = 0.0;
            diag_[j] = std::fabs(x1);
            continue;
        }
        const double mu = std::sqrt(x1 * x1 + sigma);
        const double v1 = (x1 <= 0.0) ? x1 - mu : -sigma / (x1 + mu);
        beta_[j] = 2.0 * v1 * v1 / (sigma + v1 * v1);
        for (int r = j + 1; r < t_; ++r) col[r] /= v1;
        col[j] = mu;  // R_jj
        diag_[j] = mu;

        // Apply I - beta v v' to the trailing columns (v_j = 1 implicitly).
        for (int c = j + 1; c < d_; ++c) {
            double* rhs = &factor_[static_cast<size_t>(c) * t_];
            double dot = rhs[j];
            for (int r = j + 1; r < t_; ++r) dot += col[r] * rhs[r];
            const double w = beta_[j] * dot;
            rhs[j] -= w;
            for (int r = j + 1; r < t_; ++r) rhs[r] -= w * col[r];
        }
    }

    double dmax = 0.0;
    double dmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d_; ++j) {
        dmax = std::max(dmax, diag_[j]);
        dmin = std::min(dmin, diag_[j]);
    }
    condition_estimate_ = (dmin > 0.0) ? dmax / dmin : std::numeric_limits<double>::infinity();
    if (dmax == 0.0 || dmin < rank_tol * dmax) {
        throw SingularDesignError(
            "stacked design is numerically rank deficient (condition estimate " +
                std::to_string(condition_estimate_) + ")",
            condition_estimate_);
    }
}

RealMatrix QrSolver::solve(const RealMatrix& y) const {
    if (y.rows() != t_) throw DimensionError("solve: Y row count must equal design rows");
    const int e = y.cols();
    RealMatrix out(d_, e);
    std::vector<double> work(t_);
    for (int c = 0; c < e; ++c) {
        for (int r = 0; r < t_; ++r) work[r] = y(r, c);
        for (int j = 0; j < d_; ++j) {
            if (beta_[j] == 0.0) continue;
            const double* v = &factor_[static_cast<size_t>(j) * t_];
            double dot = work[j];
            for (int r = j + 1; r < t_; ++r) dot += v[r] * work[r];
            const double w = beta_[j] * dot;
            work[j] -= w;
            for (int r = j + 1; r < t_; ++r) work[r] -= w * v[r];
        }
        for (int j = d_ - 1; j >= 0; --j) {
            double s = work[j];
            for (int k = j + 1; k < d_; ++k) s -= factor_[static_cast<size_t>(k) * t_ + j] * out(k, c);
            out(j, c) = s / factor_[static_cast<size_t>(j) * t_ + j];
        }
    }
    return out;
}

RealMatrix least_squares_solve(const RealMatrix& x, const RealMatrix& y) {
    return QrSolver(x).solve(y);
}

double operator_norm(const RealMatrix& m) {
    const int r = m.rows();
    const int c = m.cols();
    if (frobenius_norm_sq(m) == 0.0) return 0.0;
    // Iterate on the smaller Gram side.
    const bool gram_cols = c <= r;
    const int dim = gram_cols ? c : r;
    const int other = gram_cols ? r : c;

    // Deterministic start, tilted so it is not orthogonal to the dominant
    // singular subspace of sign-patterned matrices.
    std::vector<double> v(dim);
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) {
        v[i] = 1.0 + 0.5 * (i + 1) / static_cast<double>(dim);
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (double& t : v) t /= norm;

    std::vector<double> u(other);
    std::vector<double> w(dim);
    double lambda = 0.0;
    const int max_iter = 10000;
    const double tol = 1e-12;
    bool restarted = false;

    auto apply_gram = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (gram_cols) {
            for (int i = 0; i < other; ++i) {
                double s = 0.0;
                for (int j = 0; j < dim; ++j) s += m(i, j) * in[j];
                u[i] = s;
            }
            for (int j = 0; j < dim; ++j) {
                double s = 0.0;
                for (int i = 0; i < other; ++i) s += m(i, j) * u[i];
                out[j] = s;
            }
        } else {
            for (int i = 0; i < other; ++i) {
                double s = 0.0;
                for (int j = 0; j < dim; ++j) s += m(j, i) * in[j];
                u[i] = s;
            }
            for (int j = 0; j < dim; ++j) {
                double s = 0.0;
                for (int i = 0; i < other; ++i) s += m(j, i) * u[i];
                out[j] = s;
            }
        }
    };

    for (int it = 0; it < max_iter; ++it) {
        apply_gram(v, w);
        double rayleigh = 0.0;
        double wn = 0.0;
        for (int j = 0; j < dim; ++j) {
            rayleigh += v[j] * w[j];
            wn += w[j] * w[j];
        }
        wn = std::sqrt(wn);
        if (wn == 0.0) {
            // Start vector was exactly in the null space; restart from the
            // heaviest Gram coordinate.
            if (restarted) return 0.0;
            restarted = true;
            int best = 0;
            double best_norm = -1.0;
            for (int j = 0; j < dim; ++j) {
                double s = 0.0;
                if (gram_cols) {
                    for (int i = 0; i < other; ++i) s += m(i, j) * m(i, j);
                } else {
                    for (int i = 0; i < other; ++i) s += m(j, i) * m(j, i);
                }
                if (s > best_norm) {
                    best_norm = s;
                    best = j;
                }
            }
            std::fill(v.begin(), v.end(), 0.0);
            v[best] = 1.0;
            lambda = 0.0;
            continue;
        }
        const double diff = std::fabs(rayleigh - lambda);
        lambda = rayleigh;
        if (diff <= tol * std::max(1.0, std::fabs(lambda))) break;
        for (int j = 0; j < dim; ++j) v[j] = w[j] / wn;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace bmlr
