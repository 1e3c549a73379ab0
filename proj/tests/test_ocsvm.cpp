#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "vxw/errors.hpp"
#include "vxw/ocsvm.hpp"

using namespace vxw;
using vxw::testing::gaussian;
using vxw::testing::random_vector;

namespace {

// ---------------------------------------------------------------------------
// Independent dense QP oracle: projected gradient on
//   min 0.5 a^T K a  s.t.  sum a = 1, 0 <= a <= cap
// with an exact capped-simplex projection by bisection. Shares no code with
// the production solver.

std::vector<double> project_capped_simplex(const std::vector<double>& y, double cap) {
    double lo = -2.0 - cap, hi = 2.0 + cap;
    for (double v : y) {
        lo = std::min(lo, v - cap - 1.0);
        hi = std::max(hi, v + 1.0);
    }
    for (int it = 0; it < 200; ++it) {
        const double lambda = 0.5 * (lo + hi);
        double sum = 0.0;
        for (double v : y) sum += std::clamp(v - lambda, 0.0, cap);
        if (sum > 1.0)
            lo = lambda;
        else
            hi = lambda;
    }
    const double lambda = 0.5 * (lo + hi);
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::clamp(y[i] - lambda, 0.0, cap);
    return x;
}

struct OracleSolution {
    std::vector<double> alpha;
    double objective = 0.0;
    double rho = 0.0;
};

OracleSolution oracle_qp(const std::vector<std::vector<double>>& points, double nu,
                         double gamma) {
    const std::size_t n = points.size();
    const double cap = 1.0 / (nu * static_cast<double>(n));
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) K[i * n + j] = rbf(points[i], points[j], gamma);

    // Lipschitz bound via Gershgorin row sums.
    double lips = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(K[i * n + j]);
        lips = std::max(lips, row);
    }
    const double step = 1.0 / lips;

    std::vector<double> alpha = project_capped_simplex(std::vector<double>(n, 1.0 / n), cap);
    std::vector<double> grad(n);
    for (int it = 0; it < 1000000; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += K[i * n + j] * alpha[j];
            grad[i] = acc;
        }
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = alpha[i] - step * grad[i];
        const std::vector<double> next = project_capped_simplex(y, cap);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::abs(next[i] - alpha[i]));
        alpha = next;
        if (delta < 1e-13 && it > 10) break;
    }

    OracleSolution sol;
    sol.alpha = alpha;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += K[i * n + j] * alpha[j];
        grad[i] = acc;
        sol.objective += 0.5 * alpha[i] * grad[i];
    }

    // rho by the same KKT rule, rederived from the oracle's alpha with a
    // tolerance band for the bound classification.
    const double band = 1e-7;
    double free_sum = 0.0;
    std::size_t free_n = 0;
    double lower = -1e300, upper = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] < band)
            upper = std::min(upper, grad[i]);
        else if (alpha[i] > cap - band)
            lower = std::max(lower, grad[i]);
        else {
            free_sum += grad[i];
            ++free_n;
        }
    }
    if (free_n > 0)
        sol.rho = free_sum / static_cast<double>(free_n);
    else if (lower > -1e299 && upper < 1e299)
        sol.rho = 0.5 * (lower + upper);
    else if (lower > -1e299)
        sol.rho = lower;
    else
        sol.rho = upper;
    return sol;
}

double oracle_decision(const OracleSolution& sol, const std::vector<std::vector<double>>& points,
                       double gamma, const std::vector<double>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        acc += sol.alpha[i] * rbf(points[i], x, gamma);
    return acc - sol.rho;
}

// Smallest eigenvalue of a small symmetric matrix by cyclic Jacobi sweeps.
double min_eigenvalue(std::vector<double> a, std::size_t n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p * n + q]) < 1e-30) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    double smallest = a[0];
    for (std::size_t i = 1; i < n; ++i) smallest = std::min(smallest, a[i * n + i]);
    return smallest;
}

std::vector<std::vector<double>> gaussian_points(std::size_t n, std::size_t dim,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (double& v : p) v = gaussian(rng);
    return pts;
}

}  // namespace

TEST_SUITE("ocsvm") {

TEST_CASE("rbf basics") {
    std::mt19937_64 rng(1);
    const std::vector<double> x = random_vector(8, rng, -2.0, 2.0);
    CHECK(rbf(x, x, 3.7) == 1.0);

    CHECK(rbf(std::vector<double>{0.0}, std::vector<double>{1.0}, 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    for (int rep = 0; rep < 10; ++rep) {
        const std::vector<double> a = random_vector(5, rng, -1.0, 1.0);
        const std::vector<double> b = random_vector(5, rng, -1.0, 1.0);
        CHECK(rbf(a, b, 0.7) == rbf(b, a, 0.7));
    }

    CHECK_THROWS_AS(rbf(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, 1.0), Error);
    CHECK_THROWS_AS(rbf(x, x, 0.0), Error);
}

TEST_CASE("median gamma on two 1-D points") {
    CHECK(median_gamma({{0.0}, {1.0}}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("median gamma with an odd distance count") {
    // distances {1, 2, 3}, median 2, gamma = 1/(2*4).
    CHECK(median_gamma({{0.0}, {1.0}, {3.0}}) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("median gamma matches brute force on 100 random points") {
    const auto pts = gaussian_points(100, 32, 5);
    std::vector<double> dists;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < 32; ++d)
                s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
            dists.push_back(std::sqrt(s));
        }
    REQUIRE(dists.size() == 4950);
    std::sort(dists.begin(), dists.end());
    const double median = 0.5 * (dists[2474] + dists[2475]);
    CHECK(median_gamma(pts) == doctest::Approx(0.5 / (median * median)).epsilon(1e-12));
}

TEST_CASE("identical points have no spread") {
    CHECK_THROWS_AS(median_gamma({{1.0, 2.0}, {1.0, 2.0}}), DegenerateSpreadError);
}

TEST_CASE("single point with nu = 1") {
    const OcSvmModel m = train_ocsvm({{0.3, 0.4}}, 1.0, KernelConfig{1.0});
    REQUIRE(m.alphas.size() == 1);
    CHECK(m.alphas[0] == doctest::Approx(1.0));
    CHECK(m.rho == doctest::Approx(1.0));
    CHECK(decision(m, std::vector<double>{0.3, 0.4}) == doctest::Approx(0.0));
}

TEST_CASE("two identical points with nu = 1") {
    const OcSvmModel m = train_ocsvm({{1.0}, {1.0}}, 1.0, KernelConfig{2.0});
    double sum = std::accumulate(m.alphas.begin(), m.alphas.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(decision(m, std::vector<double>{1.0}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("far probes score -rho") {
    const auto pts = gaussian_points(12, 4, 9);
    const OcSvmModel m = train_ocsvm(pts, 0.4, KernelConfig{1.0});
    const std::vector<double> far(4, 1e4);
    CHECK(decision(m, far) == doctest::Approx(-m.rho).epsilon(1e-12));
}

TEST_CASE("non-finite training input rejected") {
    CHECK_THROWS_AS(
        train_ocsvm({{0.0}, {std::numeric_limits<double>::quiet_NaN()}}, 0.5, KernelConfig{1.0}),
        Error);
}

TEST_CASE("solver matches the dense QP oracle on small problems") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 2 + rep % 7;
        const auto pts = gaussian_points(n, 3, 1000 + rep);
        const double nu = (rep % 3 == 0) ? 0.1 : (rep % 3 == 1 ? 0.5 : 1.0);
        const double gamma = 0.5;

        const OcSvmModel m = train_ocsvm(pts, nu, KernelConfig{gamma});
        const OracleSolution oracle = oracle_qp(pts, nu, gamma);
        CHECK(m.converged);
        CHECK(std::abs(m.dual_objective() - oracle.objective) <= 1e-6);

        // Full alpha comparison: reconstruct dense alphas from the model.
        std::vector<double> dense(n, 0.0);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n && k < m.support_vectors.size(); ++i)
            if (pts[i] == m.support_vectors[k]) dense[i] = m.alphas[k++];
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(dense[i] - oracle.alpha[i]) <= 1e-5);

        for (int probe = 0; probe < 20; ++probe) {
            const std::vector<double> x = random_vector(3, rng, -3.0, 3.0);
            CHECK(std::abs(decision(m, x) - oracle_decision(oracle, pts, gamma, x)) <= 1e-6);
        }
    }
}

TEST_CASE("dual feasibility and KKT conditions after training") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t n = 30;
        const auto pts = gaussian_points(n, 5, 300 + seed);
        const double nu = 0.2;
        const double gamma = median_gamma(pts);
        const OcSvmModel m = train_ocsvm(pts, nu, KernelConfig{gamma});
        REQUIRE(m.converged);

        const double cap = 1.0 / (nu * static_cast<double>(n));
        double sum = 0.0;
        for (double a : m.alphas) {
            CHECK(a >= -1e-12);
            CHECK(a <= cap + 1e-12);
            sum += a;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

        // Complementarity at the solver tolerance.
        const double tau = 1e-6 * (1.0 + std::abs(m.rho));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double f = decision(m, pts[i]);
            bool is_sv = false;
            double a = 0.0;
            for (std::size_t k = 0; k < m.support_vectors.size(); ++k)
                if (m.support_vectors[k] == pts[i]) {
                    is_sv = true;
                    a = m.alphas[k];
                }
            if (!is_sv) {
                CHECK(f >= -tau);
            } else if (a < cap - 1e-10) {
                CHECK(std::abs(f) <= tau);
            } else {
                CHECK(f <= tau);
            }
        }
    }
}

TEST_CASE("nu bounds outliers and support vectors") {
    const std::size_t n = 200;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto pts = gaussian_points(n, 8, 700 + seed);
        const double nu = 0.03;
        const OcSvmModel m = train_ocsvm(pts, nu, KernelConfig{median_gamma(pts)});
        REQUIRE(m.converged);

        std::size_t negative = 0;
        for (const auto& p : pts) negative += decision(m, p) < 0.0;
        const double slack = 2.0 / std::sqrt(static_cast<double>(n));
        CHECK(static_cast<double>(negative) / n <= nu + slack);
        CHECK(static_cast<double>(m.support_vectors.size()) / n >= nu - slack);
    }
}

TEST_CASE("decision values are invariant to training order") {
    const auto pts = gaussian_points(20, 4, 900);
    std::vector<std::vector<double>> reversed(pts.rbegin(), pts.rend());
    // Tight tolerance resolves the unique optimum of the strictly convex
    // dual, so the orderings must agree to high precision.
    SolverOptions opts;
    opts.tolerance = 1e-12;
    const double gamma = median_gamma(pts);
    const OcSvmModel a = train_ocsvm(pts, 0.25, KernelConfig{gamma}, opts);
    const OcSvmModel b = train_ocsvm(reversed, 0.25, KernelConfig{gamma}, opts);

    std::mt19937_64 rng(13);
    for (int probe = 0; probe < 30; ++probe) {
        const std::vector<double> x = random_vector(4, rng, -2.0, 2.0);
        CHECK(std::abs(decision(a, x) - decision(b, x)) <= 1e-9);
    }
}

TEST_CASE("kernel matrices are positive semidefinite") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::size_t n = 7;
        const auto pts = gaussian_points(n, 3, 40 + seed);
        std::vector<double> K(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) K[i * n + j] = rbf(pts[i], pts[j], 0.8);
        CHECK(min_eigenvalue(K, n) >= -1e-9);
    }
}

}  // TEST_SUITE
