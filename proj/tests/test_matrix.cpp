#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "bmlr/matrix.hpp"
#include "bmlr/rng.hpp"
#include "doctest.h"

using namespace bmlr;

namespace {

RealMatrix random_matrix(int rows, int cols, RandomStream& rs) {
    RealMatrix m(rows, cols);
    for (double& v : m.data()) v = 2.0 * rs.uniform() - 1.0;
    return m;
}

}  // namespace

TEST_CASE("construction validates shape and finiteness") {
    CHECK_THROWS_AS(RealMatrix(0, 3), DimensionError);
    CHECK_THROWS_AS(RealMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(RealMatrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}),
                    DimensionError);
    CHECK_THROWS_AS(RealMatrix(1, 1, {std::numeric_limits<double>::infinity()}), DimensionError);
    const RealMatrix ok{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(ok.rows() == 2);
    CHECK(ok(1, 0) == 3.0);
}

TEST_CASE("vectorize stacks columns") {
    CHECK(vectorize(RealMatrix{{1, 2}, {3, 4}}) == std::vector<double>{1, 3, 2, 4});
    CHECK(vectorize(RealMatrix{{5}}) == std::vector<double>{5});
    CHECK(vectorize(RealMatrix::identity(2)) == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("unvectorize inverts vectorize") {
    CHECK(unvectorize({1, 3, 2, 4}, 2, 2) == RealMatrix{{1, 2}, {3, 4}});
    CHECK(unvectorize({7}, 1, 1) == RealMatrix{{7}});
    // Hand column-stacking of a 2x3.
    CHECK(unvectorize({1, 2, 3, 4, 5, 6}, 2, 3) == RealMatrix{{1, 3, 5}, {2, 4, 6}});
    CHECK_THROWS_AS(unvectorize({1, 2, 3}, 2, 2), DimensionError);
}

TEST_CASE("vectorize round-trip on random matrices up to 50x50") {
    RandomStream rs(101);
    for (int iter = 0; iter < 25; ++iter) {
        const int rows = 1 + static_cast<int>(rs.uniform() * 50);
        const int cols = 1 + static_cast<int>(rs.uniform() * 50);
        const RealMatrix m = random_matrix(rows, cols, rs);
        CHECK(unvectorize(vectorize(m), rows, cols) == m);
    }
}

TEST_CASE("kronecker product blocks") {
    CHECK(kronecker(RealMatrix{{2}}, RealMatrix::identity(2)) == RealMatrix{{2, 0}, {0, 2}});

    const RealMatrix b{{1, 2}, {3, 4}};
    const RealMatrix block_diag = kronecker(RealMatrix::identity(2), b);
    CHECK(block_diag == RealMatrix{{1, 2, 0, 0}, {3, 4, 0, 0}, {0, 0, 1, 2}, {0, 0, 3, 4}});

    // Hand block expansion of [[1,2],[3,4]] x [[0,1],[1,0]].
    CHECK(kronecker(RealMatrix{{1, 2}, {3, 4}}, RealMatrix{{0, 1}, {1, 0}}) ==
          RealMatrix{{0, 1, 0, 2}, {1, 0, 2, 0}, {0, 3, 0, 4}, {3, 0, 4, 0}});
}

TEST_CASE("kronecker carries the vec identity: vec(AXB) = (B' kron A) vec(X)") {
    RandomStream rs(202);
    for (int iter = 0; iter < 30; ++iter) {
        const int n = 1 + static_cast<int>(rs.uniform() * 6);
        const int m = 1 + static_cast<int>(rs.uniform() * 6);
        const int q = 1 + static_cast<int>(rs.uniform() * 6);
        const int p = 1 + static_cast<int>(rs.uniform() * 6);
        const RealMatrix a = random_matrix(n, m, rs);
        const RealMatrix x = random_matrix(m, q, rs);
        const RealMatrix b = random_matrix(q, p, rs);

        const std::vector<double> lhs = vectorize(a * x * b);
        const RealMatrix op = kronecker(b.transposed(), a);
        const std::vector<double> vx = vectorize(x);
        double max_dev = 0.0;
        for (int r = 0; r < op.rows(); ++r) {
            double s = 0.0;
            for (int c = 0; c < op.cols(); ++c) s += op(r, c) * vx[static_cast<size_t>(c)];
            max_dev = std::max(max_dev, std::fabs(s - lhs[static_cast<size_t>(r)]));
        }
        CHECK(max_dev < 1e-12);
    }
}

TEST_CASE("elementwise norms") {
    CHECK(frobenius_norm(RealMatrix::identity(2)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(max_norm(RealMatrix::identity(2)) == 1.0);
    const RealMatrix d{{3, 0}, {0, 1}};
    CHECK(frobenius_norm(d) == doctest::Approx(std::sqrt(10.0)));
    CHECK(max_norm(d) == 3.0);
    CHECK(frobenius_norm_sq(d) == doctest::Approx(10.0));
}

TEST_CASE("flat index map is the documented bijection") {
    const FlatIndexMap ix{3, 4, 5, 2};  // m, q, n, p
    std::vector<bool> seen_rows(static_cast<size_t>(ix.rows()), false);
    for (int l = 0; l < ix.q; ++l) {
        for (int k = 0; k < ix.m; ++k) {
            const int r = ix.row_index(k, l);
            CHECK(r == k + l * ix.m);
            CHECK(!seen_rows[static_cast<size_t>(r)]);
            seen_rows[static_cast<size_t>(r)] = true;
        }
    }
    std::vector<bool> seen_cols(static_cast<size_t>(ix.cols()), false);
    for (int j = 0; j < ix.p; ++j) {
        for (int i = 0; i < ix.n; ++i) {
            const int c = ix.col_index(i, j);
            CHECK(c == i + j * ix.n);
            CHECK(!seen_cols[static_cast<size_t>(c)]);
            seen_cols[static_cast<size_t>(c)] = true;
        }
    }
}

TEST_CASE("product dims are checked") {
    const RealMatrix row{{1, 2}};
    const RealMatrix one{{1}};
    CHECK_THROWS_AS(row * row, DimensionError);
    CHECK_THROWS_AS(row + one, DimensionError);
}
