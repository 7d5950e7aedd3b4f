#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "bmlr/estimators.hpp"
#include "bmlr/rng.hpp"
#include "doctest.h"

using namespace bmlr;

namespace {

ModelParameters make_params(int n, int m, int p, int q, double sigma_r, double sigma_c,
                            uint64_t seed) {
    ModelParameters params;
    params.A_star = generate_A_star(n, m, derive_seed(seed, kStreamParamA));
    params.B_star = generate_B_star(q, p, derive_seed(seed, kStreamParamB));
    params.sigma_r = sigma_r;
    params.sigma_c = sigma_c;
    return params;
}

// Test-local Gauss-Jordan inverse; independent of the QR path under test.
RealMatrix gauss_jordan_inverse(RealMatrix a) {
    const int d = a.rows();
    RealMatrix inv = RealMatrix::identity(d);
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r) {
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        }
        for (int c = 0; c < d; ++c) {
            std::swap(a(col, c), a(pivot, c));
            std::swap(inv(col, c), inv(pivot, c));
        }
        const double diag = a(col, col);
        for (int c = 0; c < d; ++c) {
            a(col, c) /= diag;
            inv(col, c) /= diag;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            for (int c = 0; c < d; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

RealMatrix stack_vectorized(const std::vector<RealMatrix>& ms) {
    const int cols = ms[0].rows() * ms[0].cols();
    RealMatrix out(static_cast<int>(ms.size()), cols);
    for (size_t t = 0; t < ms.size(); ++t) {
        const auto v = vectorize(ms[t]);
        for (int c = 0; c < cols; ++c) out(static_cast<int>(t), c) = v[static_cast<size_t>(c)];
    }
    return out;
}

}  // namespace

TEST_CASE("noiseless C-hat equals the Kronecker product B* (x) A*'") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        const ModelParameters params = make_params(3, 2, 2, 4, 0.0, 0.0, seed);
        const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 2L * 2 * 4, seed);
        const CHat c = compute_c_hat(ds);
        const RealMatrix expect = kronecker(params.B_star, params.A_star.transposed());
        CHECK(max_norm(c.matrix - expect) < 1e-10);
    }
}

TEST_CASE("canonical noiseless C-hat rows are the vectorized forward maps") {
    const ModelParameters params = make_params(2, 2, 3, 2, 0.0, 0.0, 17);
    const Dataset ds = generate_dataset(params, DesignKind::Canonical, 4, 17);
    const CHat c = compute_c_hat(ds);
    for (long t = 0; t < 4; ++t) {
        const auto row = vectorize(forward_map(params, ds.predictors[static_cast<size_t>(t)]));
        for (size_t j = 0; j < row.size(); ++j) {
            CHECK(std::fabs(c.matrix(static_cast<int>(t), static_cast<int>(j)) - row[j]) < 1e-12);
        }
    }
}

TEST_CASE("noisy C-hat matches the explicit normal-equations oracle") {
    const ModelParameters params = make_params(2, 2, 2, 2, 1.0, 1.0, 23);
    const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 8, 23);
    const CHat c = compute_c_hat(ds);

    const RealMatrix x = stack_vectorized(ds.predictors);
    const RealMatrix y = stack_vectorized(ds.responses);
    const RealMatrix oracle = gauss_jordan_inverse(x.transposed() * x) * x.transposed() * y;
    CHECK(max_norm(c.matrix - oracle) < 1e-9);
}

TEST_CASE("singular designs propagate a singular-design error") {
    Dataset ds;
    ds.dims = DatasetDims{1, 2, 1, 1, 4};
    for (int t = 0; t < 4; ++t) {
        RealMatrix x(2, 1);
        x(0, 0) = 1.0;  // second coordinate always zero: rank 1 < mq
        ds.predictors.push_back(x);
        ds.responses.push_back(RealMatrix(1, 1));
    }
    CHECK_THROWS_AS(compute_c_hat(ds), SingularDesignError);
}

TEST_CASE("canonical recovery is exact") {
    SUBCASE("identity A") {
        const RealMatrix a = RealMatrix::identity(2);
        const RealMatrix b{{1, 2}, {3, 4}};
        std::vector<RealMatrix> obs;
        for (int t = 0; t < 4; ++t) {
            RealMatrix e(2, 2);
            e(t % 2, t / 2) = 1.0;
            obs.push_back(a * e * b);
        }
        const CanonicalRecovery rec = recover_noiseless_canonical(obs, 2, 2);
        CHECK(max_norm(rec.A - a) == 0.0);
        CHECK(max_norm(rec.B - b) == 0.0);
        CHECK(rec.i_spread <= 1e-9);
    }
    SUBCASE("hand instance") {
        const RealMatrix a{{0.3, 0.7}, {0.6, 0.4}};
        const RealMatrix b{{1, 2}, {3, 4}};
        std::vector<RealMatrix> obs;
        for (int t = 0; t < 4; ++t) {
            RealMatrix e(2, 2);
            e(t % 2, t / 2) = 1.0;
            obs.push_back(a * e * b);
        }
        const CanonicalRecovery rec = recover_noiseless_canonical(obs, 2, 2);
        CHECK(max_norm(rec.A - a) < 1e-12);
        CHECK(max_norm(rec.B - b) < 1e-12);
    }
    SUBCASE("a zero B entry is skipped") {
        const RealMatrix a{{0.25, 0.75}, {0.5, 0.5}};
        const RealMatrix b{{0, 2}, {3, 4}};  // B(0,0) = 0
        std::vector<RealMatrix> obs;
        for (int t = 0; t < 4; ++t) {
            RealMatrix e(2, 2);
            e(t % 2, t / 2) = 1.0;
            obs.push_back(a * e * b);
        }
        const CanonicalRecovery rec = recover_noiseless_canonical(obs, 2, 2);
        CHECK(max_norm(rec.A - a) < 1e-12);
        CHECK(max_norm(rec.B - b) < 1e-12);
    }
    SUBCASE("all-zero B is unrecoverable") {
        std::vector<RealMatrix> obs(4, RealMatrix(2, 2));
        CHECK_THROWS_AS(recover_noiseless_canonical(obs, 2, 2), UnrecoverableError);
    }
    SUBCASE("inconsistent input is rejected") {
        const RealMatrix a{{0.3, 0.7}, {0.6, 0.4}};
        const RealMatrix b{{1, 2}, {3, 4}};
        std::vector<RealMatrix> obs;
        for (int t = 0; t < 4; ++t) {
            RealMatrix e(2, 2);
            e(t % 2, t / 2) = 1.0;
            obs.push_back(a * e * b);
        }
        obs[1](0, 0) += 0.5;  // breaks the shared-row structure
        CHECK_THROWS_AS(recover_noiseless_canonical(obs, 2, 2), UnrecoverableError);
    }
}

TEST_CASE("general recovery inverts the Kronecker structure") {
    SUBCASE("exact on the product form") {
        const ModelParameters params = make_params(3, 2, 2, 2, 0.0, 0.0, 31);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{2, 2, 3, 2}};
        const auto [a, b] = recover_noiseless_general(c);
        CHECK(max_norm(a - params.A_star) < 1e-12);
        CHECK(max_norm(b - params.B_star) < 1e-12);
    }
    SUBCASE("n = 1 reduces to the plain k-sum") {
        const ModelParameters params = make_params(1, 3, 2, 2, 0.0, 0.0, 32);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{3, 2, 1, 2}};
        const auto [a, b] = recover_noiseless_general(c);
        CHECK(max_norm(a - params.A_star) < 1e-12);
        CHECK(max_norm(b - params.B_star) < 1e-12);
    }
    SUBCASE("random dims recover and agree with every individual ratio") {
        RandomStream rs(33);
        for (int iter = 0; iter < 20; ++iter) {
            const int n = 1 + static_cast<int>(rs.uniform() * 5);
            const int m = 1 + static_cast<int>(rs.uniform() * 5);
            const int p = 1 + static_cast<int>(rs.uniform() * 5);
            const int q = 1 + static_cast<int>(rs.uniform() * 5);
            const ModelParameters params = make_params(n, m, p, q, 0.0, 0.0, 100 + iter);
            const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 2L * m * q,
                                                200 + iter);
            const CHat c = compute_c_hat(ds);
            const auto [a, b] = recover_noiseless_general(c);
            CHECK(max_norm(a - params.A_star) < 1e-10);
            CHECK(max_norm(b - params.B_star) < 1e-10);

            // Ratio oracle: every usable (l,j) gives the same A entry.
            const double bmax = max_norm(b);
            for (int i = 0; i < n; ++i) {
                for (int k = 0; k < m; ++k) {
                    for (int l = 0; l < q; ++l) {
                        for (int j = 0; j < p; ++j) {
                            if (std::fabs(b(l, j)) <= 1e-6 * bmax) continue;
                            const double ratio =
                                c.matrix(c.index.row_index(k, l), c.index.col_index(i, j)) / b(l, j);
                            CHECK(std::fabs(ratio - a(i, k)) < 1e-10);
                        }
                    }
                }
            }
        }
    }
    SUBCASE("degenerate B raises") {
        CHECK_THROWS_AS(recover_noiseless_general(CHat{RealMatrix(4, 4), FlatIndexMap{2, 2, 2, 2}}),
                        DegenerateBError);
    }
}

TEST_CASE("B estimator") {
    SUBCASE("noiseless equals B*") {
        const ModelParameters params = make_params(4, 3, 2, 3, 0.0, 0.0, 41);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{3, 3, 4, 2}};
        CHECK(max_norm(estimate_b_hat(c) - params.B_star) < 1e-12);
    }
    SUBCASE("all-ones coefficient matrix averages to m") {
        RealMatrix ones(6, 2);  // mq = 6 (m=3, q=2), np = 2 (n=2, p=1)
        for (double& v : ones.data()) v = 1.0;
        const RealMatrix b = estimate_b_hat(CHat{ones, FlatIndexMap{3, 2, 2, 1}});
        for (double v : b.data()) CHECK(v == doctest::Approx(3.0));
    }
    SUBCASE("matches the naive loop on a noisy instance") {
        const ModelParameters params = make_params(3, 2, 2, 2, 1.0, 1.0, 43);
        const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 16, 43);
        const CHat c = compute_c_hat(ds);
        const RealMatrix b = estimate_b_hat(c);
        for (int l = 0; l < 2; ++l) {
            for (int j = 0; j < 2; ++j) {
                double sum = 0.0;
                for (int i = 0; i < 3; ++i) {
                    for (int k = 0; k < 2; ++k) {
                        sum += c.matrix(k + l * 2, i + j * 3);
                    }
                }
                CHECK(std::fabs(b(l, j) - sum / 3.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("gamma statistic") {
    SUBCASE("noiseless equals A* times the B average") {
        const ModelParameters params = make_params(3, 4, 2, 3, 0.0, 0.0, 51);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{4, 3, 3, 2}};
        const RealMatrix gamma = compute_gamma_hat(c);
        double beta = 0.0;
        for (double v : params.B_star.data()) beta += v;
        beta /= 6.0;
        CHECK(max_norm(gamma - beta * params.A_star) < 1e-12);
    }
    SUBCASE("all ones stays all ones") {
        RealMatrix ones(4, 6);
        for (double& v : ones.data()) v = 1.0;
        const RealMatrix gamma = compute_gamma_hat(CHat{ones, FlatIndexMap{2, 2, 2, 3}});
        for (double v : gamma.data()) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("matches the naive loop") {
        const ModelParameters params = make_params(2, 3, 2, 2, 1.0, 1.0, 53);
        const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 12, 53);
        const CHat c = compute_c_hat(ds);
        const RealMatrix gamma = compute_gamma_hat(c);
        for (int i = 0; i < 2; ++i) {
            for (int k = 0; k < 3; ++k) {
                double sum = 0.0;
                for (int l = 0; l < 2; ++l) {
                    for (int j = 0; j < 2; ++j) {
                        sum += c.matrix(k + l * 3, i + j * 2);
                    }
                }
                CHECK(std::fabs(gamma(i, k) - sum / 4.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("A ratio estimator") {
    SUBCASE("m = 1 forces all ones") {
        ModelParameters params = make_params(3, 1, 2, 2, 0.0, 0.0, 61);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{1, 2, 3, 2}};
        const ATilde at = estimate_a_tilde(c);
        for (double v : at.values.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("noiseless equals A*") {
        const ModelParameters params = make_params(4, 3, 3, 2, 0.0, 0.0, 62);
        const CHat c{kronecker(params.B_star, params.A_star.transposed()),
                     FlatIndexMap{3, 2, 4, 3}};
        const ATilde at = estimate_a_tilde(c);
        CHECK(max_norm(at.values - params.A_star) < 1e-10);
        CHECK(at.denom_warnings.empty());
    }
    SUBCASE("hand instance n=2, m=2, p=q=1") {
        const CHat c{RealMatrix{{1, 2}, {3, 4}}, FlatIndexMap{2, 1, 2, 1}};
        const ATilde at = estimate_a_tilde(c);
        CHECK(at.values(0, 0) == doctest::Approx(1.0 / 6.0));
        CHECK(at.values(0, 1) == doctest::Approx(3.0 / 6.0));
        CHECK(at.values(1, 0) == doctest::Approx(2.0 / 4.0));
        CHECK(at.values(1, 1) == doctest::Approx(1.0));
        REQUIRE(at.beta_hat_loo.size() == 2);
        CHECK(at.beta_hat_loo[0] == doctest::Approx(6.0));
        CHECK(at.beta_hat_loo[1] == doctest::Approx(4.0));
    }
    SUBCASE("n < 2 is a config error") {
        const CHat c{RealMatrix(2, 1), FlatIndexMap{2, 1, 1, 1}};
        CHECK_THROWS_AS(estimate_a_tilde(c), ConfigError);
    }
    SUBCASE("guarded denominators become NaN and clip to zero") {
        // Row block for response row 1 is all zero, so row 0's leave-one-out
        // denominator vanishes.
        RealMatrix m(2, 2);
        m(0, 0) = 1.0;
        m(1, 0) = 2.0;
        const CHat c{m, FlatIndexMap{2, 1, 2, 1}};
        const ATilde at = estimate_a_tilde(c);
        CHECK(std::isnan(at.values(0, 0)));
        CHECK(std::isnan(at.values(0, 1)));
        CHECK(!std::isnan(at.values(1, 0)));
        REQUIRE(at.denom_warnings.size() == 2);
        CHECK(at.denom_warnings[0] == std::pair<int, int>{0, 0});
        const AHat ah = estimate_a_hat(at.values);
        CHECK(ah.values(0, 0) == 0.0);
        CHECK(ah.clip_count >= 2);
    }
}

TEST_CASE("clipping") {
    RealMatrix m(1, 3);
    m(0, 0) = 1.3;
    m(0, 1) = -0.2;
    m(0, 2) = 0.42;
    const AHat a = estimate_a_hat(m);
    CHECK(a.values(0, 0) == 1.0);
    CHECK(a.values(0, 1) == 0.0);
    CHECK(a.values(0, 2) == 0.42);
    CHECK(a.clip_count == 2);

    // Idempotence on random inputs.
    RandomStream rs(71);
    RealMatrix r(5, 5);
    for (double& v : r.data()) v = 4.0 * rs.uniform() - 2.0;
    const AHat once = estimate_a_hat(r);
    const AHat twice = estimate_a_hat(once.values);
    CHECK(once.values == twice.values);
    CHECK(twice.clip_count == 0);
}

TEST_CASE("threshold formulas") {
    // tau_B at sigma=1, T=2, m=n=1, p=q=1, delta=2/e: sqrt(log 2) + 1.
    const double expected = std::sqrt(std::log(2.0)) + 1.0;
    CHECK(threshold_tau_b(1.0, 1, 1, 2, 1, 1, 2.0 / std::numbers::e) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(threshold_tau_a(1.0, 2, 1, 1, 1, 1, 2.0 / std::numbers::e) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(1.8325546111576977).epsilon(1e-12));

    // Homogeneity: doubling T divides tau_B by sqrt(2).
    const double t1 = threshold_tau_b(1.5, 3, 4, 100, 5, 6, 0.1);
    const double t2 = threshold_tau_b(1.5, 3, 4, 200, 5, 6, 0.1);
    CHECK(t1 / t2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    // Quadrupling p*q halves tau_A.
    const double a1 = threshold_tau_a(1.5, 100, 2, 3, 4, 5, 0.1);
    const double a2 = threshold_tau_a(1.5, 100, 8, 3, 4, 5, 0.1);
    CHECK(a1 / a2 == doctest::Approx(2.0).epsilon(1e-12));

    CHECK(threshold_tau_b(0.0, 1, 1, 1, 1, 1, 0.5) == 0.0);
    CHECK(threshold_tau_a(0.0, 1, 1, 1, 1, 1, 0.5) == 0.0);
    CHECK_THROWS_AS(threshold_tau_b(1.0, 1, 1, 1, 1, 1, 0.0), ConfigError);
    CHECK_THROWS_AS(threshold_tau_a(1.0, 1, 1, 1, 1, 1, 1.0), ConfigError);
}

TEST_CASE("hard thresholding of B") {
    RealMatrix b(1, 3);
    b(0, 0) = 0.5;
    b(0, 1) = 0.7;
    b(0, 2) = 0.0;
    const RealMatrix kept = hard_threshold_b(b, 0.3);
    CHECK(kept(0, 0) == 0.0);  // |0.5| <= 0.6
    CHECK(kept(0, 1) == 0.7);
    CHECK(kept(0, 2) == 0.0);

    const RealMatrix same = hard_threshold_b(b, 0.0);
    CHECK(same(0, 0) == 0.5);
    CHECK(same(0, 2) == 0.0);  // exact zeros stay zero

    // Support shrinks monotonically as tau grows.
    RandomStream rs(81);
    RealMatrix r(6, 6);
    for (double& v : r.data()) v = 2.0 * rs.uniform() - 1.0;
    size_t prev = support_of(hard_threshold_b(r, 0.0)).size();
    for (double tau : {0.05, 0.1, 0.2, 0.3, 0.5}) {
        const size_t cur = support_of(hard_threshold_b(r, tau)).size();
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("hard thresholding of A gates on gamma") {
    RealMatrix a(1, 2);
    a(0, 0) = 0.9;
    a(0, 1) = 0.9;
    RealMatrix gamma(1, 2);
    gamma(0, 0) = 0.1;  // below the 2*tau = 0.6 gate
    gamma(0, 1) = 0.7;
    const RealMatrix kept = hard_threshold_a(a, gamma, 0.3);
    CHECK(kept(0, 0) == 0.0);
    CHECK(kept(0, 1) == 0.9);

    // Mixed instance against the per-entry rule.
    RandomStream rs(83);
    RealMatrix av(4, 5), gv(4, 5);
    for (double& v : av.data()) v = rs.uniform();
    for (double& v : gv.data()) v = 2.0 * rs.uniform() - 1.0;
    const double tau = 0.25;
    const RealMatrix out = hard_threshold_a(av, gv, tau);
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 5; ++k) {
            const double expect = std::fabs(gv(i, k)) > 2.0 * tau ? av(i, k) : 0.0;
            CHECK(out(i, k) == expect);
        }
    }
    CHECK_THROWS_AS(hard_threshold_a(RealMatrix(2, 2), RealMatrix(2, 3), 0.1), DimensionError);
}

TEST_CASE("support extraction") {
    CHECK(support_of(RealMatrix(3, 3)).empty());
    const auto diag = support_of(RealMatrix::identity(3));
    REQUIRE(diag.size() == 3);
    CHECK(diag[0] == std::pair<int, int>{0, 0});
    CHECK(diag[2] == std::pair<int, int>{2, 2});

    RandomStream rs(91);
    RealMatrix r(5, 4);
    for (double& v : r.data()) v = 2.0 * rs.uniform() - 1.0;
    const double tau = 0.2;
    const RealMatrix kept = hard_threshold_b(r, tau);
    const auto supp = support_of(kept);
    size_t expected = 0;
    for (double v : r.data()) {
        if (std::fabs(v) > 2.0 * tau) ++expected;
    }
    CHECK(supp.size() == expected);
}

namespace {

// Independent evaluation of the two-term tail function.
double tail_fn(double sigma, int m, int n, int p, int q, long T, double t) {
    const double pi = std::numbers::pi;
    const double tpq = static_cast<double>(T) * p * q;
    return sigma * std::sqrt(2.0 * m) / (t * std::sqrt(static_cast<double>(n) * p * q * T * pi)) *
               std::exp(-tpq * t * t / (2.0 * m * sigma * sigma)) +
           sigma * std::sqrt(2.0) / (t * std::sqrt(static_cast<double>(p) * q * T * pi)) *
               std::exp(-tpq * t * t / (2.0 * sigma * sigma));
}

}  // namespace

TEST_CASE("t_delta root solve") {
    SUBCASE("residuals stay below 1e-10 on a seeded grid") {
        RandomStream rs(101);
        for (int iter = 0; iter < 40; ++iter) {
            const double sigma = 0.5 + 2.0 * rs.uniform();
            const int m = 1 + static_cast<int>(rs.uniform() * 6);
            const int n = 1 + static_cast<int>(rs.uniform() * 6);
            const int p = 1 + static_cast<int>(rs.uniform() * 6);
            const int q = 1 + static_cast<int>(rs.uniform() * 6);
            const long T = 10 + static_cast<long>(rs.uniform() * 1000);
            const double delta = 0.01 + 0.4 * rs.uniform();
            const double t = solve_t_delta(sigma, m, n, p, q, T, delta);
            CHECK(std::fabs(tail_fn(sigma, m, n, p, q, T, t) - delta) <= 1e-10);
        }
    }
    SUBCASE("doubling T decreases the root") {
        const double t1 = solve_t_delta(1.0, 3, 2, 4, 3, 200, 0.05);
        const double t2 = solve_t_delta(1.0, 3, 2, 4, 3, 400, 0.05);
        CHECK(t2 < t1);
    }
    SUBCASE("dense grid scan agrees") {
        const double sigma = 1.0;
        const int m = 2, n = 2, p = 2, q = 2;
        const long T = 100;
        const double delta = 0.05;
        const double solved = solve_t_delta(sigma, m, n, p, q, T, delta);

        const double lo = 1e-6, hi = 1.0;
        const long points = 1000000;
        double best_t = lo, best_gap = 1e300;
        for (long i = 0; i <= points; ++i) {
            const double t = lo + (hi - lo) * static_cast<double>(i) / points;
            const double gap = std::fabs(tail_fn(sigma, m, n, p, q, T, t) - delta);
            if (gap < best_gap) {
                best_gap = gap;
                best_t = t;
            }
        }
        CHECK(std::fabs(solved - best_t) <= (hi - lo) / points);
    }
}

TEST_CASE("threshold spec bundles all three values") {
    const ThresholdSpec spec = make_threshold_spec(1.0, 4, 3, 5, 2, 500, 0.1);
    CHECK(spec.tau_b == doctest::Approx(threshold_tau_b(1.0, 3, 4, 500, 5, 2, 0.1)));
    CHECK(spec.tau_a == doctest::Approx(threshold_tau_a(1.0, 500, 5, 2, 4, 3, 0.1)));
    CHECK(spec.t_delta > 0.0);
    const ThresholdSpec zero = make_threshold_spec(0.0, 4, 3, 5, 2, 500, 0.1);
    CHECK(zero.tau_b == 0.0);
    CHECK(zero.t_delta == 0.0);
}

TEST_CASE("estimate_all shares one coefficient matrix") {
    const ModelParameters params = make_params(4, 3, 3, 2, 1.0, 1.0, 111);
    const Dataset ds = generate_dataset(params, DesignKind::UniformIID, 24, 111);
    const CHat c = compute_c_hat(ds);
    const EstimatorOutput out = estimate_all(c);
    CHECK(max_norm(out.b_hat - estimate_b_hat(c)) == 0.0);
    CHECK(max_norm(out.gamma_hat - compute_gamma_hat(c)) == 0.0);
    CHECK(out.a_hat.rows() == 4);
    for (double v : out.a_hat.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("sampling laws under the ORT design") {
    // Pooled over many small trials: C-hat noise entries are N(0, sigma^2/T)
    // and B-hat noise entries are N(0, m sigma^2 / (n T)).
    const int n = 2, m = 2, p = 2, q = 2;
    const long T = 32;
    const double sigma = 1.0;
    const ModelParameters params = make_params(n, m, p, q, sigma, sigma, 121);
    const RealMatrix c_true = kronecker(params.B_star, params.A_star.transposed());

    const long trials = 25000;
    double c_sum = 0.0, c_sum_sq = 0.0;
    double b_sum = 0.0, b_sum_sq = 0.0;
    long c_count = 0, b_count = 0;
    for (long trial = 0; trial < trials; ++trial) {
        const Dataset ds =
            generate_dataset(params, DesignKind::OrthogonalScaled, T, derive_seed(7000, 0, trial));
        const CHat c = compute_c_hat(ds);
        for (size_t idx = 0; idx < c.matrix.data().size(); ++idx) {
            const double d = c.matrix.data()[idx] - c_true.data()[idx];
            c_sum += d;
            c_sum_sq += d * d;
            ++c_count;
        }
        const RealMatrix b = estimate_b_hat(c);
        for (size_t idx = 0; idx < b.data().size(); ++idx) {
            const double d = b.data()[idx] - params.B_star.data()[idx];
            b_sum += d;
            b_sum_sq += d * d;
            ++b_count;
        }
    }
    REQUIRE(c_count >= 200000);
    REQUIRE(b_count >= 100000);

    const double c_mean = c_sum / c_count;
    const double c_var = c_sum_sq / c_count - c_mean * c_mean;
    const double c_var_target = sigma * sigma / static_cast<double>(T);
    CHECK(std::fabs(c_mean) <= 3.0 * sigma / std::sqrt(static_cast<double>(T) * c_count));
    CHECK(std::fabs(c_var - c_var_target) <= 0.02 * c_var_target);

    const double b_mean = b_sum / b_count;
    const double b_var = b_sum_sq / b_count - b_mean * b_mean;
    const double b_var_target = m * sigma * sigma / (static_cast<double>(n) * T);
    CHECK(std::fabs(b_var - b_var_target) <= 0.02 * b_var_target);
}
