#pragma once

#include <vector>

#include "bmlr/matrix.hpp"

namespace bmlr {

struct OrtReport {
    bool ok = false;
    double max_deviation = 0.0;  // max-norm of X'X/T - I
};

/// True iff the stacked design satisfies X'X/T = I within tol (max norm).
OrtReport check_ort(const RealMatrix& x, double tol);

/// Householder QR of a T x d design (T >= d), reusable across right-hand
/// sides. The design is factored directly rather than through the normal
/// equations. Rank gate: smallest |R_jj| must exceed rank_tol times the
/// largest, else SingularDesignError carrying max|R_jj|/min|R_jj|.
class QrSolver {
public:
    explicit QrSolver(const RealMatrix& x, double rank_tol = 1e-10);

    /// Least-squares solution argmin ||X C - Y||_F, one column at a time.
    RealMatrix solve(const RealMatrix& y) const;

    double condition_estimate() const { return condition_estimate_; }
    int rows() const { return t_; }
    int cols() const { return d_; }

private:
    int t_ = 0;
    int d_ = 0;
    double condition_estimate_ = 0.0;
    std::vector<double> factor_;  // column-major; R on/above diagonal, reflectors below
    std::vector<double> beta_;
    std::vector<double> diag_;
};

/// One-shot least squares; equal to (X'X)^{-1} X'Y for full-rank X.
RealMatrix least_squares_solve(const RealMatrix& x, const RealMatrix& y);

/// Largest singular value by power iteration on the Gram operator.
/// Deterministic tilted start vector, tolerance 1e-12, cap 10000 iterations.
double operator_norm(const RealMatrix& m);

}  // namespace bmlr
