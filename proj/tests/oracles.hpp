#pragma once

// Test-side reference implementations. Nothing here calls into the library's
// solvers; models are read only through their public tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "polca/model.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;  // [from][to]

inline std::vector<Dense> dense_transitions(const polca::DecisionModel& m)
{
    const auto n = m.num_states();
    std::vector<Dense> t(m.num_actions(), Dense(n, std::vector<double>(n, 0.0)));
    for (std::size_t a = 0; a < m.num_actions(); ++a)
        for (std::size_t s = 0; s < n; ++s)
            for (const auto& e : m.transitions[a].row(s))
                t[a][s][e.to] += e.prob;
    return t;
}

/// Synchronous value iteration on dense tables; terminal states get no
/// continuation.
inline std::vector<double> value_iteration(const polca::DecisionModel& m, double tol = 1e-12,
                                           const std::vector<char>& terminal = {})
{
    const auto t = dense_transitions(m);
    const auto n = m.num_states();
    std::vector<double> v(n, 0.0), next(n);
    for (int it = 0; it < 10000000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m.num_actions(); ++a) {
                double q = m.rewards[a][s];
                if (terminal.empty() || !terminal[s])
                    for (std::size_t j = 0; j < n; ++j)
                        q += m.discount * t[a][s][j] * v[j];
                best = std::max(best, q);
            }
            next[s] = best;
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff <= tol)
            break;
    }
    return v;
}

/// Exact value of a deterministic stationary policy by Gaussian elimination on
/// (I - gamma P) v = r.
inline std::vector<double> policy_value(const polca::DecisionModel& m, const std::vector<std::size_t>& policy)
{
    const auto t = dense_transitions(m);
    const auto n = m.num_states();
    Dense a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        a[s][s] = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            a[s][j] -= m.discount * t[policy[s]][s][j];
        a[s][n] = m.rewards[policy[s]][s];
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0.0)
                continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k)
                a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> v(n);
    for (std::size_t s = 0; s < n; ++s)
        v[s] = a[s][n] / a[s][s];
    return v;
}

/// Unnormalized-then-normalized Bayes filter by direct summation.
inline std::vector<double> bayes(const polca::DecisionModel& m, const std::vector<double>& b, std::size_t a,
                                 std::size_t o)
{
    const auto t = dense_transitions(m);
    const auto n = m.num_states();
    std::vector<double> out(n, 0.0);
    double z = 0.0;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < n; ++j) {
            const double w = b[s] * t[a][s][j] * m.observation(a, j, o);
            out[j] += w;
            z += w;
        }
    for (double& x : out)
        x /= z;
    return out;
}

/// Shortest path lengths from `start` over a 4-connected grid where
/// blocked(x, y, dx, dy) forbids a move.
inline std::vector<std::vector<int>> grid_distances(int w, int h, int sx, int sy,
                                                    const std::function<bool(int, int, int, int)>& blocked)
{
    std::vector<std::vector<int>> d(w, std::vector<int>(h, -1));
    std::deque<std::pair<int, int>> q{{sx, sy}};
    d[sx][sy] = 0;
    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || d[nx][ny] >= 0 || blocked(x, y, dx[k], dy[k]))
                continue;
            d[nx][ny] = d[x][y] + 1;
            q.emplace_back(nx, ny);
        }
    }
    return d;
}

/// Finite-horizon optimal POMDP value at a belief by full expectimax over
/// action/observation trees.
inline double expectimax(const polca::DecisionModel& m, const std::vector<double>& b, int horizon)
{
    if (horizon == 0)
        return 0.0;
    const auto t = dense_transitions(m);
    const auto n = m.num_states();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m.num_actions(); ++a) {
        double q = 0.0;
        for (std::size_t s = 0; s < n; ++s)
            q += b[s] * m.rewards[a][s];
        for (std::size_t o = 0; o < m.num_observations(); ++o) {
            std::vector<double> next(n, 0.0);
            double z = 0.0;
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t j = 0; j < n; ++j) {
                    const double w = b[s] * t[a][s][j] * m.observation(a, j, o);
                    next[j] += w;
                    z += w;
                }
            if (z <= 0.0)
                continue;
            for (double& x : next)
                x /= z;
            q += m.discount * z * expectimax(m, next, horizon - 1);
        }
        best = std::max(best, q);
    }
    return best;
}

// ---- random model generators ----

struct Planted {
    polca::DecisionModel model;
    std::vector<std::size_t> block;  // planted bisimulation class per state
};

/// MDP built by expanding a random quotient over `blocks` classes: members of
/// a class share the class rewards and the class's aggregate transition mass,
/// split randomly among the members of each target class.
inline Planted planted_mdp(std::mt19937_64& rng, std::size_t n, std::size_t actions, std::size_t blocks,
                           double discount = 0.95)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> block(n);
    for (std::size_t s = 0; s < n; ++s)
        block[s] = s < blocks ? s : std::uniform_int_distribution<std::size_t>(0, blocks - 1)(rng);
    std::shuffle(block.begin(), block.end(), rng);
    std::vector<std::vector<std::size_t>> members(blocks);
    for (std::size_t s = 0; s < n; ++s)
        members[block[s]].push_back(s);

    polca::DecisionModel m;
    m.space = polca::FeatureSpace({{"s", n, {}}});
    m.discount = discount;
    for (std::size_t a = 0; a < actions; ++a) {
        m.actions.push_back("a" + std::to_string(a));
        std::vector<double> block_reward(blocks);
        for (auto& r : block_reward)
            r = std::round(u(rng) * 8.0) - 4.0;
        Dense block_t(blocks, std::vector<double>(blocks));
        for (auto& row : block_t) {
            double z = 0.0;
            for (auto& p : row) {
                p = u(rng) < 0.5 ? 0.0 : u(rng);
                z += p;
            }
            if (z == 0.0) {
                row[std::uniform_int_distribution<std::size_t>(0, blocks - 1)(rng)] = 1.0;
                z = 1.0;
            }
            for (auto& p : row)
                p /= z;
        }
        std::vector<std::vector<polca::Transition>> rows(n);
        std::vector<double> r(n);
        for (std::size_t s = 0; s < n; ++s) {
            r[s] = block_reward[block[s]];
            for (std::size_t c = 0; c < blocks; ++c) {
                const double mass = block_t[block[s]][c];
                if (mass == 0.0)
                    continue;
                std::vector<double> split(members[c].size());
                double z = 0.0;
                for (auto& w : split) {
                    w = u(rng) + 0.05;
                    z += w;
                }
                for (std::size_t k = 0; k < split.size(); ++k)
                    rows[s].push_back({members[c][k], mass * split[k] / z});
            }
        }
        m.transitions.emplace_back(std::move(rows));
        m.rewards.push_back(std::move(r));
    }
    return {std::move(m), std::move(block)};
}

/// Planted MDP plus observations that depend on the destination's class
/// only, so the planted classes stay stable under the observation-aware
/// criterion.
inline Planted planted_pomdp(std::mt19937_64& rng, std::size_t n, std::size_t actions, std::size_t observations,
                             std::size_t blocks)
{
    auto p = planted_mdp(rng, n, actions, blocks);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t o = 0; o < observations; ++o)
        p.model.observations.push_back("o" + std::to_string(o));
    for (std::size_t a = 0; a < actions; ++a) {
        Dense by_block(blocks, std::vector<double>(observations));
        for (auto& row : by_block) {
            double z = 0.0;
            for (auto& x : row) {
                x = u(rng) + 0.01;
                z += x;
            }
            for (auto& x : row)
                x /= z;
        }
        std::vector<double> table(n * observations);
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t o = 0; o < observations; ++o)
                table[s * observations + o] = by_block[p.block[s]][o];
        p.model.observation_probs.push_back(std::move(table));
    }
    return p;
}

/// Classic tiger problem: listen (-1, 85% accurate), open-left, open-right
/// (+10 / -100); opening resets uniformly.
inline polca::DecisionModel tiger(double discount = 0.95)
{
    polca::DecisionModel m;
    m.space = polca::FeatureSpace({{"tiger", 2, {"left", "right"}}});
    m.actions = {"listen", "open-left", "open-right"};
    m.observations = {"hear-left", "hear-right"};
    m.discount = discount;
    m.transitions.emplace_back(std::vector<std::vector<polca::Transition>>{{{0, 1.0}}, {{1, 1.0}}});
    for (int k = 0; k < 2; ++k)
        m.transitions.emplace_back(
            std::vector<std::vector<polca::Transition>>{{{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {1, 0.5}}});
    m.rewards = {{-1.0, -1.0}, {-100.0, 10.0}, {10.0, -100.0}};
    m.observation_probs = {{0.85, 0.15, 0.15, 0.85}, {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}};
    return m;
}

} // namespace oracle
