// ocsvm.hpp -- one-class SVM with RBF kernel.
//
// Training solves the dual
//
//   min 0.5 * a^T K a   subject to   0 <= a_i <= 1/(nu*n),  sum a_i = 1
//
// with pairwise coordinate updates (two coefficients at a time, preserving
// the sum constraint), selecting the maximal KKT-violating pair each step.
// The decision function is f(x) = sum_i a_i k(x_i, x) - rho; negative scores
// flag outliers.
#ifndef VXW_OCSVM_HPP
#define VXW_OCSVM_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace vxw {

struct KernelConfig {
    double gamma = 1.0;  // k(x, y) = exp(-gamma * |x - y|^2)
};

double rbf(std::span<const double> x, std::span<const double> y, double gamma);

// Bandwidth heuristic: gamma = scale / m^2 where m is the median of all
// n*(n-1)/2 pairwise Euclidean distances (even count: mean of the two
// central order statistics). The default scale of 0.5 places the median
// distance at one kernel length. Throws DegenerateSpreadError when m == 0.
double median_gamma(const std::vector<std::vector<double>>& points, double scale = 0.5);

struct SolverOptions {
    double tolerance = 1e-6;        // stop when the max KKT violation drops below
    std::size_t max_sweeps = 100000;  // hard cap on pair updates
};

struct OcSvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> alphas;  // dual coefficients, sum == 1
    double rho = 0.0;
    KernelConfig kernel;
    double nu = 0.0;
    bool converged = true;  // false when the sweep cap was hit first

    // Dual objective 0.5 * a^T K a of the retained solution.
    double dual_objective() const;
};

OcSvmModel train_ocsvm(const std::vector<std::vector<double>>& points, double nu,
                       KernelConfig kernel, const SolverOptions& opts = {});

double decision(const OcSvmModel& m, std::span<const double> x);

}  // namespace vxw

#endif
