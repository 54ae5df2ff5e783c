#include "lp.hpp"

#include <algorithm>
#include <cmath>

namespace polca::detail {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-12;
// Consecutive degenerate pivots tolerated before switching to Bland's rule.
constexpr int kDegenerateStreak = 16;

} // namespace

std::optional<std::vector<double>> simplex_maximize(const std::vector<std::vector<double>>& A,
                                                    std::span<const double> b, std::span<const double> c)
{
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    const std::size_t cols = n + m + 1;
    const std::size_t rhs = n + m;
    std::vector<double> t((m + 1) * cols, 0.0);
    auto at = [&](std::size_t r, std::size_t col) -> double& { return t[r * cols + col]; };

    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            at(i, j) = A[i][j];
        at(i, n + i) = 1.0;
        at(i, rhs) = b[i];
        basis[i] = n + i;
    }
    for (std::size_t j = 0; j < n; ++j)
        at(m, j) = -c[j];

    bool bland = false;
    int streak = 0;
    const std::size_t budget = 50 * (m + n) + 1000;
    for (std::size_t iter = 0;; ++iter) {
        if (iter == budget)
            return std::nullopt;

        std::size_t enter = cols;
        double most_negative = -kCostEps;
        for (std::size_t j = 0; j < rhs; ++j) {
            double cost = at(m, j);
            if (cost < most_negative) {
                enter = j;
                if (bland)
                    break;
                most_negative = cost;
            }
        }
        if (enter == cols)
            break;

        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double coef = at(i, enter);
            if (coef <= kPivotEps)
                continue;
            double ratio = std::max(at(i, rhs), 0.0) / coef;
            if (leave == m || ratio < best_ratio - 1e-14 ||
                (ratio <= best_ratio + 1e-14 && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave == m)
            return std::nullopt;

        if (best_ratio <= 1e-14) {
            if (++streak > kDegenerateStreak)
                bland = true;
        } else {
            streak = 0;
        }

        const double pivot = at(leave, enter);
        for (std::size_t j = 0; j < cols; ++j)
            at(leave, j) /= pivot;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave)
                continue;
            double factor = at(i, enter);
            if (factor == 0.0)
                continue;
            for (std::size_t j = 0; j < cols; ++j)
                at(i, j) -= factor * at(leave, j);
        }
        basis[leave] = enter;
    }

    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n)
            x[basis[i]] = std::max(at(i, rhs), 0.0);
    return x;
}

std::optional<std::vector<double>> dominance_witness(std::span<const double> candidate,
                                                     const std::vector<std::span<const double>>& others,
                                                     double epsilon)
{
    const std::size_t n = candidate.size();
    if (others.empty()) {
        std::vector<double> vertex(n, 0.0);
        vertex[static_cast<std::size_t>(std::max_element(candidate.begin(), candidate.end()) - candidate.begin())] = 1.0;
        return vertex;
    }
    // Variables: belief x (n entries) followed by the margin d.
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    A.reserve(others.size() + 1);
    for (const auto& u : others) {
        std::vector<double> row(n + 1);
        for (std::size_t i = 0; i < n; ++i)
            row[i] = u[i] - candidate[i];
        row[n] = 1.0;
        A.push_back(std::move(row));
        b.push_back(0.0);
    }
    std::vector<double> simplex_row(n + 1, 1.0);
    simplex_row[n] = 0.0;
    A.push_back(std::move(simplex_row));
    b.push_back(1.0);

    std::vector<double> c(n + 1, 0.0);
    c[n] = 1.0;
    auto solution = simplex_maximize(A, b, c);
    if (!solution || (*solution)[n] <= epsilon)
        return std::nullopt;

    std::vector<double> x(solution->begin(), solution->begin() + static_cast<std::ptrdiff_t>(n));
    double total = 0.0;
    for (double v : x)
        total += v;
    if (total <= 0.0)
        return std::nullopt;
    for (double& v : x)
        v /= total;
    return x;
}

} // namespace polca::detail
