#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "gapflight/dataset.hpp"
#include "gapflight/mlp.hpp"
#include "gapflight/rng.hpp"

namespace gapflight {

/// Training settings for the imitation runs:
///   A: raw data;  B: raw + augmentation;
///   C: normalized; D: normalized + augmentation.
enum class TrainSetting { kA, kB, kC, kD };

inline bool setting_normalizes(TrainSetting s) {
    return s == TrainSetting::kC || s == TrainSetting::kD;
}
inline bool setting_augments(TrainSetting s) {
    return s == TrainSetting::kB || s == TrainSetting::kD;
}

inline TrainSetting parse_setting(const std::string& s) {
    if (s == "A" || s == "a") return TrainSetting::kA;
    if (s == "B" || s == "b") return TrainSetting::kB;
    if (s == "C" || s == "c") return TrainSetting::kC;
    if (s == "D" || s == "d") return TrainSetting::kD;
    throw std::invalid_argument("unknown training setting: " + s);
}

inline const char* setting_name(TrainSetting s) {
    switch (s) {
        case TrainSetting::kA: return "A";
        case TrainSetting::kB: return "B";
        case TrainSetting::kC: return "C";
        case TrainSetting::kD: return "D";
    }
    return "?";
}

struct LossCurvePoint {
    int epoch = 0;
    double train_loss = 0.0;  // optimization-space objective incl. weight decay
    double test_loss = 0.0;   // raw-space imitation error, decay excluded
};

struct TrainOptions {
    int epochs = 50;
    double lr = 1e-5;
    int batch_size = 6000;
    std::uint64_t seed = 0;
    double weight_decay = 1e-4;
    int test_trajectories = 100;  // planner: held-out trajectories, never trained on
    double test_fraction = 0.05;  // controller: held-out sample fraction
    double aug_scale_min = 0.2;   // random scale augmentation range (0, 5]
    double aug_scale_max = 5.0;
    bool use_adam = true;
    int chunk = 512;
    int workers = 2;
    // Normalized settings: false (default) trains through the output
    // rescaling so every setting optimizes the raw-space objective; true
    // optimizes plain MSE in the time-scaled frame instead.
    bool normalized_objective = false;
    // Invoked after every epoch; lets callers keep the curve-so-far when a
    // run diverges mid-way.
    std::function<void(const LossCurvePoint&)> on_epoch;
};

struct TrainResult {
    Mlp net;
    std::vector<LossCurvePoint> curve;
};

namespace detail {

inline void shuffle_indices(std::vector<int>& idx, Rng& rng) {
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }
}

/// Raw-space test loss of a planner net; normalization applied around the
/// network when requested.
inline double planner_test_loss(const Mlp& net, const std::vector<PlannerSample>& test,
                                bool normalize, const PlannerLossWeights& w) {
    if (test.empty()) return 0.0;
    const int n = static_cast<int>(test.size());
    const int chunk = 4096;
    double total = 0.0;
    for (int lo = 0; lo < n; lo += chunk) {
        const int m = std::min(chunk, n - lo);
        Eigen::MatrixXd x(17, m);
        std::vector<double> scales(m, 1.0);
        for (int i = 0; i < m; ++i) {
            const PlannerSample& s = test[lo + i];
            if (normalize) {
                const auto nx = normalize_planner_input(s.x, &scales[i]);
                for (int r = 0; r < 17; ++r) x(r, i) = nx[r];
            } else {
                for (int r = 0; r < 17; ++r) x(r, i) = s.x[r];
            }
        }
        const Eigen::MatrixXd out = forward_batch(net, x);
        for (int i = 0; i < m; ++i) {
            std::array<double, 9> pred;
            for (int r = 0; r < 9; ++r) pred[r] = out(r, i);
            if (normalize) pred = denormalize_planner_output(pred, scales[i]);
            const auto& label = test[lo + i].y;
            double sq_p = 0.0, sq_v = 0.0, sq_a = 0.0;
            for (int r = 0; r < 3; ++r) {
                sq_p += (pred[r] - label[r]) * (pred[r] - label[r]);
                sq_v += (pred[3 + r] - label[3 + r]) * (pred[3 + r] - label[3 + r]);
                sq_a += (pred[6 + r] - label[6 + r]) * (pred[6 + r] - label[6 + r]);
            }
            total += w.w_p * sq_p + w.w_v * sq_v + w.w_a * sq_a;
        }
    }
    return total / n;
}

inline double controller_test_loss(const Mlp& net, const std::vector<ControllerSample>& test,
                                   const ControllerLossWeights& w) {
    if (test.empty()) return 0.0;
    const int n = static_cast<int>(test.size());
    Eigen::MatrixXd x(12, n);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < 12; ++r) x(r, i) = test[i].x[r];
    const Eigen::MatrixXd out = forward_batch(net, x);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += w.w_thr * std::abs(test[i].y[2] - out(2, i)) +
                 w.w_eul * euler_error(test[i].y[0], test[i].y[1], out(0, i), out(1, i));
    }
    return total / n;
}

}  // namespace detail

/// Minibatch imitation training of the planner network. Settings B/D build
/// each batch from one part raw data and two parts augmented data; settings
/// C/D train in the time-scaled frame. The recorded test loss is always
/// evaluated in raw units so the four settings are comparable.
inline TrainResult train_planner(const PlannerDataset& ds, const MlpSpec& spec, TrainSetting setting,
                                 const TrainOptions& opts) {
    if (ds.samples.empty()) throw std::invalid_argument("train_planner: empty dataset");
    if (spec.input_dim != 17 || spec.output_dim != 9)
        throw ShapeError("train_planner: spec must be 17 -> 9");

    const int ppt = ds.points_per_traj;
    const int n_test_traj = std::min(opts.test_trajectories, std::max(0, ds.n_traj - 1));
    const int n_train_traj = ds.n_traj - n_test_traj;
    const int n_train = n_train_traj * ppt;
    std::vector<PlannerSample> test(ds.samples.begin() + n_train, ds.samples.end());

    const bool normalize = setting_normalizes(setting);
    const bool augments = setting_augments(setting);

    PlannerLossWeights lw;
    lw.weight_decay = opts.weight_decay;
    LossConfig loss_cfg;
    loss_cfg.kind = LossKind::kPlanner;
    loss_cfg.planner = lw;

    TrainResult result;
    result.net = make_mlp(spec, derive_seed(opts.seed, 1));
    AdamState adam = AdamState::zeros_like(result.net);
    BackwardOptions bw{opts.chunk, opts.workers};

    const int raw_per_batch =
        augments ? std::max(1, opts.batch_size / 3) : std::max(1, opts.batch_size);
    const int n_batches = (n_train + raw_per_batch - 1) / raw_per_batch;

    std::vector<int> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    // Normalized settings train the network in the time-scaled frame but
    // optimize the raw-space objective: the fixed output rescaling folds
    // into per-sample block weights (1/s^2, 1/s^4, 1/s^6), so all four
    // settings minimize the same comparable loss.
    auto fill_column = [&](Eigen::MatrixXd& x, Eigen::MatrixXd& y, Eigen::MatrixXd& bw, int col,
                           const PlannerSample& s) {
        if (normalize) {
            double scale = 1.0;
            const auto nx = normalize_planner_input(s.x, &scale);
            const auto ny = normalize_planner_label(s.y, scale);
            for (int r = 0; r < 17; ++r) x(r, col) = nx[r];
            for (int r = 0; r < 9; ++r) y(r, col) = ny[r];
            const double s2 = scale * scale;
            bw(0, col) = 1.0 / s2;
            bw(1, col) = 1.0 / (s2 * s2);
            bw(2, col) = 1.0 / (s2 * s2 * s2);
        } else {
            for (int r = 0; r < 17; ++r) x(r, col) = s.x[r];
            for (int r = 0; r < 9; ++r) y(r, col) = s.y[r];
        }
    };

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        Rng rng(derive_seed(opts.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        detail::shuffle_indices(order, rng);

        double epoch_loss = 0.0;
        long epoch_samples = 0;
        for (int bi = 0; bi < n_batches; ++bi) {
            const int lo = bi * raw_per_batch;
            const int raw_n = std::min(raw_per_batch, n_train - lo);
            const int aug_n = augments ? 2 * raw_n : 0;
            const int total = raw_n + aug_n;

            Eigen::MatrixXd x(17, total), y(9, total);
            Eigen::MatrixXd bweights(3, normalize ? total : 0);
            for (int i = 0; i < raw_n; ++i)
                fill_column(x, y, bweights, i, ds.samples[order[lo + i]]);
            for (int i = 0; i < aug_n; ++i) {
                const PlannerSample& base =
                    ds.samples[order[static_cast<int>(rng.below(n_train))]];
                const AugmentMode mode =
                    rng.next_unit() < 0.5
                        ? AugmentMode::flip()
                        : AugmentMode::scale(rng.uniform(opts.aug_scale_min, opts.aug_scale_max));
                fill_column(x, y, bweights, raw_n + i, augment(base, mode));
            }

            Grad grad;
            double loss;
            const bool weighted = normalize && !opts.normalized_objective;
            try {
                loss = backward(result.net, x, y, loss_cfg, &grad, bw,
                                weighted ? &bweights : nullptr);
            } catch (const TrainingFault&) {
                throw TrainingFault("train_planner: diverged", epoch);
            }
            if (opts.lr > 0.0) {
                if (opts.use_adam)
                    adam_step(result.net, grad, opts.lr, adam);
                else
                    sgd_step(result.net, grad, opts.lr);
            }
            epoch_loss += loss * total;
            epoch_samples += total;
        }

        LossCurvePoint pt;
        pt.epoch = epoch;
        pt.train_loss = epoch_loss / static_cast<double>(epoch_samples);
        pt.test_loss = detail::planner_test_loss(result.net, test, normalize, lw);
        if (!std::isfinite(pt.train_loss) || !std::isfinite(pt.test_loss))
            throw TrainingFault("train_planner: diverged", epoch);
        result.curve.push_back(pt);
        if (opts.on_epoch) opts.on_epoch(pt);
    }
    return result;
}

/// Controller imitation: plain minibatch regression (the normalization and
/// augmentation algebra is specific to the planner problem).
inline TrainResult train_controller(const ControllerDataset& ds, const MlpSpec& spec,
                                    const TrainOptions& opts) {
    if (ds.samples.empty()) throw std::invalid_argument("train_controller: empty dataset");
    if (spec.input_dim != 12 || spec.output_dim != 3)
        throw ShapeError("train_controller: spec must be 12 -> 3");

    const int n_total = static_cast<int>(ds.samples.size());
    const int n_test = std::min(n_total - 1, static_cast<int>(n_total * opts.test_fraction));
    const int n_train = n_total - n_test;
    std::vector<ControllerSample> test(ds.samples.begin() + n_train, ds.samples.end());

    ControllerLossWeights lw;
    lw.weight_decay = opts.weight_decay;
    LossConfig loss_cfg;
    loss_cfg.kind = LossKind::kController;
    loss_cfg.controller = lw;

    TrainResult result;
    result.net = make_mlp(spec, derive_seed(opts.seed, 2));
    AdamState adam = AdamState::zeros_like(result.net);
    BackwardOptions bw{opts.chunk, opts.workers};

    const int batch = std::max(1, opts.batch_size);
    const int n_batches = (n_train + batch - 1) / batch;
    std::vector<int> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        Rng rng(derive_seed(opts.seed, 2000 + static_cast<std::uint64_t>(epoch)));
        detail::shuffle_indices(order, rng);

        double epoch_loss = 0.0;
        long epoch_samples = 0;
        for (int bi = 0; bi < n_batches; ++bi) {
            const int lo = bi * batch;
            const int n = std::min(batch, n_train - lo);
            Eigen::MatrixXd x(12, n), y(3, n);
            for (int i = 0; i < n; ++i) {
                const ControllerSample& s = ds.samples[order[lo + i]];
                for (int r = 0; r < 12; ++r) x(r, i) = s.x[r];
                for (int r = 0; r < 3; ++r) y(r, i) = s.y[r];
            }
            Grad grad;
            double loss;
            try {
                loss = backward(result.net, x, y, loss_cfg, &grad, bw);
            } catch (const TrainingFault&) {
                throw TrainingFault("train_controller: diverged", epoch);
            }
            if (opts.lr > 0.0) {
                if (opts.use_adam)
                    adam_step(result.net, grad, opts.lr, adam);
                else
                    sgd_step(result.net, grad, opts.lr);
            }
            epoch_loss += loss * n;
            epoch_samples += n;
        }

        LossCurvePoint pt;
        pt.epoch = epoch;
        pt.train_loss = epoch_loss / static_cast<double>(epoch_samples);
        pt.test_loss = detail::controller_test_loss(result.net, test, lw);
        if (!std::isfinite(pt.train_loss) || !std::isfinite(pt.test_loss))
            throw TrainingFault("train_controller: diverged", epoch);
        result.curve.push_back(pt);
        if (opts.on_epoch) opts.on_epoch(pt);
    }
    return result;
}

}  // namespace gapflight
