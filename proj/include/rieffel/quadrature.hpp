/*
 * Gauss-Legendre rules, plain and composite.
 */
#pragma once

#include <vector>

namespace rieffel {

struct QuadRule {
    std::vector<double> x, w;
};

// n-point rule on [a, b].  Nodes from Newton iteration on P_n.
QuadRule gauss_legendre(int n, double a, double b);

// panels equal sub-intervals, each with an n-point rule.
QuadRule composite_gauss(int panels, int n, double a, double b);

}  // namespace rieffel
