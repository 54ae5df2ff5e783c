#pragma once

#include <optional>
#include <span>
#include <vector>

namespace polca::detail {

/// Dense tableau simplex for max c.x s.t. A x <= b, x >= 0 with b >= 0, so the
/// origin is a feasible start. Returns the optimal x, or nullopt when the
/// problem is unbounded or the pivot budget runs out.
std::optional<std::vector<double>> simplex_maximize(const std::vector<std::vector<double>>& A,
                                                    std::span<const double> b, std::span<const double> c);

/// Belief at which `candidate` beats every vector in `others` by more than
/// `epsilon`, if one exists. Solves max d s.t. x.(candidate - u) >= d for all
/// u, sum(x) <= 1, x >= 0, d >= 0.
std::optional<std::vector<double>> dominance_witness(std::span<const double> candidate,
                                                     const std::vector<std::span<const double>>& others,
                                                     double epsilon);

} // namespace polca::detail
