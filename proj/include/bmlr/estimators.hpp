#pragma once

#include <utility>
#include <vector>

#include "bmlr/linalg.hpp"
#include "bmlr/matrix.hpp"
#include "bmlr/model.hpp"

namespace bmlr {

/// The mq x np least-squares coefficient estimate with its index convention.
struct CHat {
    RealMatrix matrix;
    FlatIndexMap index;
};

/// Stack vec(X_t)' / vec(Y_t)' rows and solve the least-squares system.
/// Requires T >= mq and a numerically full-rank stacked design.
CHat compute_c_hat(const Dataset& ds);

/// Result of the canonical-basis recovery; i_spread is the largest deviation
/// between row sums taken at different response rows i (they coincide for
/// model-consistent input).
struct CanonicalRecovery {
    RealMatrix A;
    RealMatrix B;
    double i_spread = 0.0;
};

/// Exact recovery from the mq canonical observations, ordered t = k + l*m.
/// B(l,j) is the k-sum of observed entries at a fixed response row, then
/// verified across rows (tolerance 1e-9); A(i,k) divides by the largest
/// usable B entry. Throws UnrecoverableError if no B entry is nonzero or the
/// input is inconsistent with the noiseless model.
CanonicalRecovery recover_noiseless_canonical(const std::vector<RealMatrix>& observations, int m,
                                              int q);

/// Averaged recovery from a noiseless coefficient matrix:
/// B(l,j) = mean over i of the k-sums; A(i,k) = ratio of sums over the
/// nonzero-B index set. Throws DegenerateBError when that set is empty or its
/// B-sum cancels to zero.
std::pair<RealMatrix, RealMatrix> recover_noiseless_general(const CHat& c);

/// B estimate: entry (l,j) is the average over i of the k-sums of C-hat.
RealMatrix estimate_b_hat(const CHat& c);

struct ATilde {
    RealMatrix values;                              // n x m, NaN where guarded
    std::vector<double> beta_hat_loo;               // per response row i
    std::vector<std::pair<int, int>> denom_warnings;  // (i, k) with |denominator| < 1e-12
};

/// Ratio estimate for A: numerator sums row (i) entries of C-hat, the
/// denominator sums a leave-one-out B estimate so the two stay independent.
/// Requires n >= 2. Guarded denominators yield NaN entries plus a warning.
ATilde estimate_a_tilde(const CHat& c);

struct AHat {
    RealMatrix values;  // entries clipped into [0, 1]
    int clip_count = 0;
};

/// Entrywise clip to [0, 1]; NaN inputs map to 0. clip_count counts modified
/// entries.
AHat estimate_a_hat(const RealMatrix& a_tilde);

/// gamma(i,k): mean over (l,j) of C-hat((k,l),(i,j)); the gating statistic
/// for the sparse A estimator.
RealMatrix compute_gamma_hat(const CHat& c);

/// sigma * sqrt(2m/(nT)) * (sqrt(log(2pq)) + sqrt(log(2/delta)))
double threshold_tau_b(double sigma, int m, int n, long T, int p, int q, double delta);

/// sigma * sqrt(2/(Tpq)) * (sqrt(log(2nm)) + sqrt(log(2/delta)))
double threshold_tau_a(double sigma, long T, int p, int q, int n, int m, double delta);

/// Keep entries with |value| > 2*tau, zero the rest.
RealMatrix hard_threshold_b(const RealMatrix& b_hat, double tau);

/// Keep A entries where |gamma_hat| > 2*tau; the gate is gamma_hat, not A.
RealMatrix hard_threshold_a(const RealMatrix& a_hat, const RealMatrix& gamma_hat, double tau);

/// Unique positive root t of
///   sigma*sqrt(2m)/(t*sqrt(npqT*pi)) * exp(-Tpq t^2/(2m sigma^2))
/// + sigma*sqrt(2) /(t*sqrt(pqT*pi))  * exp(-Tpq t^2/(2 sigma^2)) = delta.
/// Bisection in a bracket [1e-12*sigma, 10*sigma*sqrt(m)*max(1, sqrt(log(1/delta)))],
/// evaluated in log space.
double solve_t_delta(double sigma, int m, int n, int p, int q, long T, double delta);

/// Indices with |entry| > zero_tol, row-major order. Default tolerance is an
/// exact zero test since the thresholded estimators produce exact zeros.
std::vector<std::pair<int, int>> support_of(const RealMatrix& m, double zero_tol = 0.0);

/// All estimators derived from one shared C-hat.
struct EstimatorOutput {
    RealMatrix b_hat;     // q x p
    RealMatrix a_tilde;   // n x m
    RealMatrix a_hat;     // n x m
    RealMatrix gamma_hat;  // n x m
    std::vector<double> beta_hat_loo;
    int clip_count = 0;
    std::vector<std::pair<int, int>> denom_warnings;
};

EstimatorOutput estimate_all(const CHat& c);

/// Threshold bundle for one (sigma, dims, T, delta) configuration. Values
/// are 0 when sigma == 0.
struct ThresholdSpec {
    double delta = 0.0;
    double tau_b = 0.0;
    double tau_a = 0.0;
    double t_delta = 0.0;
};

ThresholdSpec make_threshold_spec(double sigma, int n, int m, int p, int q, long T, double delta);

}  // namespace bmlr
