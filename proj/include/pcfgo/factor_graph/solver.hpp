// Levenberg-Marquardt solve of the sliding-window objective.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/graph.hpp"

namespace pcfgo::fgo {

struct SolverOptions {
    double initial_lambda = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double relative_tolerance = 1e-6;
    int max_iterations = 50;
};

struct SolveResult {
    std::map<StateKey, NodeState> states;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    /// Whitened gradient norm J^T r at the returned states.
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Cost after every accepted step, starting with the initial cost.
    std::vector<double> cost_history;
};

namespace detail {

class StateIndex {
public:
    explicit StateIndex(const std::map<StateKey, NodeState>& states) {
        int i = 0;
        for (const auto& [k, s] : states) offset_[k] = 4 * i++;
        size_ = 4 * i;
    }
    int offset(const StateKey& k) const {
        auto it = offset_.find(k);
        if (it == offset_.end()) throw Error(ErrorCode::KeyMismatch, "factor references a state outside the graph");
        return it->second;
    }
    int size() const { return size_; }

private:
    std::map<StateKey, int> offset_;
    int size_ = 0;
};

inline double total_cost(const std::vector<Factor>& factors, const std::map<StateKey, NodeState>& states) {
    auto lookup = [&](const StateKey& k) -> const NodeState& { return states.at(k); };
    double cost = 0.0;
    for (const auto& f : factors) {
        const Eigen::Vector3d e = factor_error(f, lookup);
        const double s = factor_sigma(f);
        cost += e.head(residual_dim(f)).squaredNorm() / (s * s);
    }
    return 0.5 * cost;
}

/// Cost change from `before` to `after`, summed term by term as
/// (e1 - e0)(e1 + e0) / sigma^2 so that decreases far below the rounding of
/// the total cost are still resolved.
inline double cost_change(const std::vector<Factor>& factors, const std::map<StateKey, NodeState>& before,
                          const std::map<StateKey, NodeState>& after) {
    auto old_state = [&](const StateKey& k) -> const NodeState& { return before.at(k); };
    auto new_state = [&](const StateKey& k) -> const NodeState& { return after.at(k); };
    long double delta = 0.0L;
    for (const auto& f : factors) {
        const int dim = residual_dim(f);
        const Eigen::Vector3d e0 = factor_error(f, old_state);
        const Eigen::Vector3d e1 = factor_error(f, new_state);
        const double s = factor_sigma(f);
        long double term = 0.0L;
        for (int i = 0; i < dim; ++i) term += static_cast<long double>(e1(i) - e0(i)) * (e1(i) + e0(i));
        delta += term / (static_cast<long double>(s) * s);
    }
    return static_cast<double>(0.5L * delta);
}

/// Whitened normal equations H = J^T J, g = J^T r with r = error / sigma and
/// J = d(r)/dx; the Gauss-Newton step is -H^-1 g.
inline void normal_equations(const std::vector<Factor>& factors, const std::map<StateKey, NodeState>& states,
                             const StateIndex& index, Eigen::MatrixXd& h, Eigen::VectorXd& g) {
    h.setZero(index.size(), index.size());
    g.setZero(index.size());
    auto lookup = [&](const StateKey& k) -> const NodeState& { return states.at(k); };
    for (const auto& f : factors) {
        const Linearization lin = factor_jacobian(f, lookup);
        const double w = 1.0 / lin.sigma;
        const int dim = lin.dim;
        for (int a = 0; a < lin.keys.count; ++a) {
            const auto ja = (lin.jacobian[static_cast<std::size_t>(a)].topRows(dim) * w).eval();
            const int oa = index.offset(lin.keys.keys[static_cast<std::size_t>(a)]);
            g.segment<4>(oa) += ja.transpose() * (lin.error.head(dim) * w);
            for (int b = 0; b < lin.keys.count; ++b) {
                const auto jb = (lin.jacobian[static_cast<std::size_t>(b)].topRows(dim) * w).eval();
                const int ob = index.offset(lin.keys.keys[static_cast<std::size_t>(b)]);
                h.block<4, 4>(oa, ob) += ja.transpose() * jb;
            }
        }
    }
}

inline std::map<StateKey, NodeState> apply_step(const std::map<StateKey, NodeState>& states,
                                                const StateIndex& index, const Eigen::VectorXd& step) {
    auto out = states;
    for (auto& [k, s] : out) {
        const int o = index.offset(k);
        s.position += step.segment<3>(o);
        s.clock_bias += step(o + 3);
    }
    return out;
}

}  // namespace detail

namespace detail {

/// Levenberg-Marquardt on one connected set of states. Damping is
/// Marquardt-style on the normal-equation diagonal.
inline SolveResult solve_component(const std::vector<Factor>& factors, const std::map<StateKey, NodeState>& states,
                                   const SolverOptions& opt) {
    const StateIndex index(states);
    SolveResult result;
    result.states = states;
    double cost = total_cost(factors, result.states);
    result.initial_cost = cost;
    result.cost_history.push_back(cost);

    Eigen::MatrixXd h;
    Eigen::VectorXd g;
    double lambda = opt.initial_lambda;
    bool done = false;

    while (!done && result.iterations < opt.max_iterations) {
        ++result.iterations;
        normal_equations(factors, result.states, index, h, g);
        if (g.lpNorm<Eigen::Infinity>() == 0.0) {
            done = true;
            break;
        }
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = h;
            for (int i = 0; i < index.size(); ++i) damped(i, i) += lambda * std::max(h(i, i), 1e-6);
            const Eigen::VectorXd step = -damped.ldlt().solve(g);
            if (!step.allFinite()) {
                lambda *= opt.lambda_up;
                if (lambda > 1e16) break;
                continue;
            }
            auto candidate = apply_step(result.states, index, step);
            const double delta = cost_change(factors, result.states, candidate);
            if (delta <= 0.0) {
                accepted = true;
                const double new_cost = std::max(cost + delta, 0.0);
                const double rel = cost > 0.0 ? -delta / cost : 0.0;
                result.states = std::move(candidate);
                cost = new_cost;
                result.cost_history.push_back(cost);
                lambda = std::max(lambda / opt.lambda_down, 1e-12);
                if (rel < opt.relative_tolerance || cost == 0.0 || step.lpNorm<Eigen::Infinity>() < 1e-10) {
                    done = true;
                }
            } else {
                lambda *= opt.lambda_up;
                if (lambda > 1e16) break;
            }
        }
        if (!accepted) {
            // No descent direction left at machine precision: treat as converged.
            done = true;
        }
    }

    normal_equations(factors, result.states, index, h, g);
    result.gradient_norm = g.norm();
    result.final_cost = cost;
    result.converged = done;
    return result;
}

/// Groups factors by connected set of states (union-find over factor keys).
/// Factor order and state order are preserved inside each group.
inline std::vector<std::pair<std::vector<Factor>, std::map<StateKey, NodeState>>> components(
    const GraphState& graph) {
    std::map<StateKey, StateKey> parent;
    for (const auto& [k, s] : graph.states) parent[k] = k;
    auto find = [&](StateKey k) {
        while (!(parent.at(k) == k)) k = parent[k] = parent.at(parent.at(k));
        return k;
    };
    for (const auto& f : graph.factors) {
        const auto k = keys_of(f);
        for (int i = 0; i < k.count; ++i) {
            if (!graph.states.contains(k.keys[static_cast<std::size_t>(i)])) {
                throw Error(ErrorCode::KeyMismatch, "factor references a state outside the graph");
            }
        }
        if (k.count == 2) {
            const StateKey a = find(k.keys[0]), b = find(k.keys[1]);
            if (!(a == b)) parent[std::max(a, b)] = std::min(a, b);
        }
    }
    std::map<StateKey, std::size_t> slot;
    std::vector<std::pair<std::vector<Factor>, std::map<StateKey, NodeState>>> out;
    for (const auto& [k, s] : graph.states) {
        const StateKey root = find(k);
        auto [it, fresh] = slot.try_emplace(root, out.size());
        if (fresh) out.emplace_back();
        out[it->second].second.emplace(k, s);
    }
    for (const auto& f : graph.factors) out[slot.at(find(keys_of(f).keys[0]))].first.push_back(f);
    return out;
}

}  // namespace detail

/// Minimizes the sum of squared whitened factor errors over every state in the
/// graph. States not linked by any factor chain are solved independently, each
/// with its own damping schedule. A solve that hits the iteration cap is
/// returned with converged == false rather than thrown.
inline SolveResult solve(const GraphState& graph, const SolverOptions& opt = {}) {
    if (graph.factors.empty() || graph.states.empty()) throw Error(ErrorCode::EmptyGraph, "nothing to solve");

    SolveResult total;
    total.converged = true;
    double grad_sq = 0.0;
    std::vector<std::vector<double>> histories;
    for (const auto& [factors, states] : detail::components(graph)) {
        if (factors.empty()) {
            total.states.insert(states.begin(), states.end());
            continue;
        }
        auto part = detail::solve_component(factors, states, opt);
        total.states.insert(part.states.begin(), part.states.end());
        total.initial_cost += part.initial_cost;
        total.final_cost += part.final_cost;
        grad_sq += part.gradient_norm * part.gradient_norm;
        total.iterations = std::max(total.iterations, part.iterations);
        total.converged = total.converged && part.converged;
        histories.push_back(std::move(part.cost_history));
    }
    total.gradient_norm = std::sqrt(grad_sq);
    // Summed per-step history; finished components hold their last cost.
    std::size_t steps = 0;
    for (const auto& h : histories) steps = std::max(steps, h.size());
    total.cost_history.assign(steps, 0.0);
    for (const auto& h : histories) {
        for (std::size_t i = 0; i < steps; ++i) total.cost_history[i] += h[std::min(i, h.size() - 1)];
    }
    return total;
}

}  // namespace pcfgo::fgo
