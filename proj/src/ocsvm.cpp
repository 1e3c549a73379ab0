#include "vxw/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vxw/errors.hpp"

namespace vxw {

namespace {

constexpr double kAlphaPrune = 1e-12;

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void check_finite(const std::vector<std::vector<double>>& points) {
    for (const auto& p : points)
        for (double v : p)
            if (!std::isfinite(v)) throw Error("train_ocsvm: non-finite training value");
}

}  // namespace

double rbf(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size())
        throw Error("rbf: length mismatch, " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
    if (!(gamma > 0.0)) throw Error("rbf: gamma must be positive");
    return std::exp(-gamma * squared_distance(x, y));
}

double median_gamma(const std::vector<std::vector<double>>& points, double scale) {
    if (points.size() < 2) throw Error("median_gamma: need at least two points");
    std::vector<double> dists;
    dists.reserve(points.size() * (points.size() - 1) / 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != points[0].size())
            throw Error("median_gamma: inconsistent point dimensions");
        for (std::size_t j = i + 1; j < points.size(); ++j)
            dists.push_back(std::sqrt(squared_distance(points[i], points[j])));
    }
    std::sort(dists.begin(), dists.end());
    const std::size_t n = dists.size();
    const double median =
        (n % 2 == 1) ? dists[n / 2] : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
    if (!(median > 0.0))
        throw DegenerateSpreadError("median_gamma: median pairwise distance is zero");
    return scale / (median * median);
}

double OcSvmModel::dual_objective() const {
    double obj = 0.0;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
        for (std::size_t j = 0; j < support_vectors.size(); ++j)
            obj += 0.5 * alphas[i] * alphas[j] *
                   rbf(support_vectors[i], support_vectors[j], kernel.gamma);
    return obj;
}

OcSvmModel train_ocsvm(const std::vector<std::vector<double>>& points, double nu,
                       KernelConfig kernel, const SolverOptions& opts) {
    const std::size_t n = points.size();
    if (n == 0) throw Error("train_ocsvm: empty training set");
    if (!(nu > 0.0) || nu > 1.0) throw Error("train_ocsvm: nu must lie in (0, 1]");
    check_finite(points);
    for (const auto& p : points)
        if (p.size() != points[0].size())
            throw Error("train_ocsvm: inconsistent point dimensions");

    const double cap = 1.0 / (nu * static_cast<double>(n));

    // Dense kernel matrix; per-voxel training sets are on the order of the
    // subject count, so n stays small.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rbf(points[i], points[j], kernel.gamma);
            K[i * n + j] = v;
            K[j * n + i] = v;
        }
    }

    // Feasible start: fill coefficients to the cap in input order until the
    // sum reaches one.
    std::vector<double> alpha(n, 0.0);
    double remaining = 1.0;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
        alpha[i] = std::min(cap, remaining);
        remaining -= alpha[i];
    }

    // Gradient of the dual objective: G = K alpha.
    std::vector<double> grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += K[i * n + j] * alpha[j];
        grad[i] = acc;
    }

    bool converged = false;
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        // Maximal violating pair: mass may move toward i (alpha_i < cap)
        // and away from j (alpha_j > 0); optimality means
        // max_j G_j - min_i G_i <= tolerance over those index sets.
        std::size_t up = n, down = n;
        double up_grad = std::numeric_limits<double>::infinity();
        double down_grad = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] < cap && grad[i] < up_grad) {
                up_grad = grad[i];
                up = i;
            }
            if (alpha[i] > 0.0 && grad[i] > down_grad) {
                down_grad = grad[i];
                down = i;
            }
        }
        if (up == n || down == n || down_grad - up_grad <= opts.tolerance) {
            converged = true;
            break;
        }

        // Move t units of mass from `down` to `up`; the restriction of the
        // objective to this segment is quadratic with curvature eta.
        const double eta =
            K[up * n + up] + K[down * n + down] - 2.0 * K[up * n + down];
        double t = (eta > kAlphaPrune) ? (down_grad - up_grad) / eta
                                       : std::numeric_limits<double>::infinity();
        t = std::min(t, std::min(cap - alpha[up], alpha[down]));

        if (t >= cap - alpha[up]) {
            t = cap - alpha[up];
            alpha[up] = cap;
        } else {
            alpha[up] += t;
        }
        if (t >= alpha[down]) {
            t = std::min(t, alpha[down]);
            alpha[down] = 0.0;
        } else {
            alpha[down] -= t;
        }
        for (std::size_t i = 0; i < n; ++i)
            grad[i] += t * (K[i * n + up] - K[i * n + down]);
    }

    // rho is the multiplier of the sum constraint: G_i at free coefficients,
    // otherwise the midpoint of the KKT-feasible interval
    // [max_{a=cap} G_i, min_{a=0} G_i].
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] <= 0.0) {
            upper = std::min(upper, grad[i]);
        } else if (alpha[i] >= cap) {
            lower = std::max(lower, grad[i]);
        } else {
            free_sum += grad[i];
            ++free_count;
        }
    }
    double rho;
    if (free_count > 0)
        rho = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(lower) && std::isfinite(upper))
        rho = 0.5 * (lower + upper);
    else if (std::isfinite(lower))
        rho = lower;
    else
        rho = upper;

    OcSvmModel model;
    model.kernel = kernel;
    model.nu = nu;
    model.rho = rho;
    model.converged = converged;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > kAlphaPrune) {
            model.support_vectors.push_back(points[i]);
            model.alphas.push_back(alpha[i]);
        }
    }
    return model;
}

double decision(const OcSvmModel& m, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        acc += m.alphas[i] * rbf(m.support_vectors[i], x, m.kernel.gamma);
    return acc - m.rho;
}

}  // namespace vxw
