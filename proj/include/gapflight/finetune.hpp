#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include "gapflight/policy.hpp"
#include "gapflight/reward.hpp"
#include "gapflight/rng.hpp"

namespace gapflight {

/// Flattened view of the fine-tuned parameter subset: the last two layers of
/// each sub-network. Keeping the early layers frozen preserves the imitated
/// feature extraction while the heads adapt to the reward.
namespace detail {

struct TunableLayers {
    // (network id, layer index): 0 = planner, 1 = controller
    std::vector<std::pair<int, int>> layers;

    static TunableLayers last_two(const PolicyNet& policy) {
        TunableLayers t;
        const int lp = policy.planner().num_layers();
        const int lc = policy.controller().num_layers();
        t.layers = {{0, lp - 2}, {0, lp - 1}, {1, lc - 2}, {1, lc - 1}};
        return t;
    }
};

inline Mlp& net_of(PolicyNet& p, int id) {
    return id == 0 ? p.mutable_planner() : p.mutable_controller();
}

inline std::int64_t tunable_size(PolicyNet& policy, const TunableLayers& t) {
    std::int64_t n = 0;
    for (auto [id, l] : t.layers) {
        const Mlp& net = net_of(policy, id);
        n += net.w[l].size() + net.b[l].size();
    }
    return n;
}

inline Eigen::VectorXd get_tunable(PolicyNet& policy, const TunableLayers& t) {
    Eigen::VectorXd v(tunable_size(policy, t));
    std::int64_t off = 0;
    for (auto [id, l] : t.layers) {
        const Mlp& net = net_of(policy, id);
        v.segment(off, net.w[l].size()) = Eigen::Map<const Eigen::VectorXd>(net.w[l].data(), net.w[l].size());
        off += net.w[l].size();
        v.segment(off, net.b[l].size()) = net.b[l];
        off += net.b[l].size();
    }
    return v;
}

inline void set_tunable(PolicyNet& policy, const TunableLayers& t, const Eigen::VectorXd& v) {
    std::int64_t off = 0;
    for (auto [id, l] : t.layers) {
        Mlp& net = net_of(policy, id);
        Eigen::Map<Eigen::VectorXd>(net.w[l].data(), net.w[l].size()) =
            v.segment(off, net.w[l].size());
        off += net.w[l].size();
        net.b[l] = v.segment(off, net.b[l].size());
        off += net.b[l].size();
    }
}

/// Centered rank transform in [-0.5, 0.5] (ties keep draw order, which is
/// deterministic under the seeded evaluation).
inline std::vector<double> centered_ranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    if (n <= 1) return ranks;
    for (size_t r = 0; r < n; ++r)
        ranks[idx[r]] = static_cast<double>(r) / static_cast<double>(n - 1) - 0.5;
    return ranks;
}

}  // namespace detail

struct FinetuneOptions {
    int iters = 30;
    int batch_episodes = 8;      // perturbation evaluations per iteration (antithetic pairs)
    int scenarios_per_iter = 2;  // common scenarios each perturbation is scored on
    double sigma = 0.02;
    double lr = 0.01;
    std::uint64_t seed = 0;
    bool randomize_scenarios = true;  // false: fixed toy scenario every episode
    ScenarioRandomization randomization;
    int workers = 2;
    double episode_tail = 0.5;
};

struct FinetunePoint {
    int iter = 0;
    double mean_return = 0.0;
    double best_return = 0.0;  // best-so-far mean
};

struct FinetuneResult {
    PolicyNet policy;
    std::vector<FinetunePoint> curve;
};

/// Generic antithetic evolution-strategies ascent on an objective over a
/// parameter vector; used by the policy fine-tuner and directly testable on
/// surrogate objectives.
inline Eigen::VectorXd es_step(const Eigen::VectorXd& theta,
                               const std::function<double(const Eigen::VectorXd&)>& objective,
                               int pairs, double sigma, double lr, Rng& rng,
                               double* mean_return = nullptr) {
    if (pairs < 1) throw std::invalid_argument("es_step: need at least one antithetic pair");
    const auto dim = theta.size();
    std::vector<Eigen::VectorXd> eps(pairs);
    std::vector<double> r_plus(pairs), r_minus(pairs);
    for (int i = 0; i < pairs; ++i) {
        eps[i] = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });
        r_plus[i] = objective(theta + sigma * eps[i]);
        r_minus[i] = objective(theta - sigma * eps[i]);
    }
    if (mean_return != nullptr) {
        double s = 0.0;
        for (int i = 0; i < pairs; ++i) s += r_plus[i] + r_minus[i];
        *mean_return = s / (2.0 * pairs);
    }
    if (sigma == 0.0 || lr == 0.0) return theta;

    std::vector<double> all;
    all.reserve(2 * pairs);
    for (int i = 0; i < pairs; ++i) all.push_back(r_plus[i]);
    for (int i = 0; i < pairs; ++i) all.push_back(r_minus[i]);
    const std::vector<double> ranks = detail::centered_ranks(all);

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < pairs; ++i) grad += (ranks[i] - ranks[pairs + i]) * eps[i];
    grad /= static_cast<double>(pairs) * sigma;
    Eigen::VectorXd next = theta + lr * grad;
    if (!next.allFinite()) throw FinetuneFault("es_step: non-finite update");
    return next;
}

/// Desk-scale policy-gradient fine-tuning: antithetic ES over the last two
/// layers of each sub-network, scored on common per-iteration scenarios.
/// Deterministic under the seed; episode evaluations within an iteration may
/// run on parallel workers without changing the result.
inline FinetuneResult finetune(const PolicyNet& initial, const Scenario& base_scenario,
                               const RewardConfig& reward_cfg, const FinetuneOptions& opts,
                               const MissionConfig& mission_cfg = {},
                               const SimParams& sim_params = {}) {
    if (opts.batch_episodes < 2)
        throw std::invalid_argument("finetune: batch_episodes must be >= 2");
    reward_cfg.validate();

    FinetuneResult result;
    result.policy = initial;
    const detail::TunableLayers tunable = detail::TunableLayers::last_two(result.policy);
    Eigen::VectorXd theta = detail::get_tunable(result.policy, tunable);
    const int pairs = opts.batch_episodes / 2;

    double best = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.iters; ++iter) {
        Rng iter_rng(derive_seed(opts.seed, 3000 + static_cast<std::uint64_t>(iter)));

        // Common scenarios for every perturbation this iteration.
        std::vector<Scenario> scenarios;
        for (int s = 0; s < std::max(1, opts.scenarios_per_iter); ++s) {
            scenarios.push_back(opts.randomize_scenarios
                                    ? opts.randomization.draw(base_scenario, iter_rng)
                                    : base_scenario);
        }

        // Draw all perturbations up front so evaluation order cannot affect
        // the random stream.
        const auto dim = theta.size();
        std::vector<Eigen::VectorXd> eps(pairs);
        for (int i = 0; i < pairs; ++i)
            eps[i] = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return iter_rng.normal(); });

        std::vector<double> returns(2 * pairs, 0.0);
        auto evaluate = [&](int slot) {
            const int pair_i = slot % pairs;
            const double sign = slot < pairs ? 1.0 : -1.0;
            PolicyNet candidate = result.policy;
            detail::set_tunable(candidate, tunable, theta + sign * opts.sigma * eps[pair_i]);
            double total = 0.0;
            for (const Scenario& sc : scenarios) {
                total += episode(candidate, sc, reward_cfg, mission_cfg, sim_params,
                                 opts.episode_tail)
                             .episode_return;
            }
            returns[slot] = total / static_cast<double>(scenarios.size());
        };

        const int n_slots = 2 * pairs;
        const int workers = std::max(1, std::min(opts.workers, n_slots));
        if (workers == 1) {
            for (int s = 0; s < n_slots; ++s) evaluate(s);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&, w]() {
                    for (int s = w; s < n_slots; s += workers) evaluate(s);
                });
            }
            for (auto& th : pool) th.join();
        }

        double mean = std::accumulate(returns.begin(), returns.end(), 0.0) /
                      static_cast<double>(n_slots);
        if (opts.sigma != 0.0 && opts.lr != 0.0) {
            const std::vector<double> ranks = detail::centered_ranks(returns);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
            for (int i = 0; i < pairs; ++i) grad += (ranks[i] - ranks[pairs + i]) * eps[i];
            grad /= static_cast<double>(pairs) * opts.sigma;
            theta += opts.lr * grad;
            if (!theta.allFinite()) throw FinetuneFault("finetune: non-finite update");
        }

        best = std::max(best, mean);
        result.curve.push_back({iter, mean, best});
    }
    detail::set_tunable(result.policy, tunable, theta);
    return result;
}

}  // namespace gapflight
