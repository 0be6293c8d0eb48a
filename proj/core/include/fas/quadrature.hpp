#pragma once

#include <functional>
#include <vector>

namespace fas {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

// Gauss-Laguerre rule for integral_0^inf e^{-u} f(u) du. Nodes from the
// Golub-Welsch eigenproblem, then polished by Newton steps on L_n in long
// double. Weights that underflow double are stored as 0.
QuadratureRule gauss_laguerre(int n);

// Gauss-Hermite rule for E f(X), X ~ N(0, 1) (weights sum to 1).
QuadratureRule gauss_hermite(int n);

struct IntegrationResult {
    double value = 0.0;
    double error = 0.0;  // Kronrod error estimate summed over panels
    int evaluations = 0;
};

// Adaptive Gauss-Kronrod (7/15) on a finite interval, splitting the panel with
// the largest error estimate until the total is below max(abs_tol, rel_tol*|I|).
// Throws AccuracyError carrying the partial value when max_panels is reached.
IntegrationResult integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                                     double rel_tol, double abs_tol = 0.0, int max_panels = 2000);

}  // namespace fas
