#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gapflight/control.hpp"
#include "gapflight/rng.hpp"
#include "gapflight/types.hpp"

namespace gapflight {

enum class Activation : std::uint32_t { kRelu = 0, kTanh = 1 };

struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden;
    int output_dim = 1;
    Activation activation = Activation::kRelu;

    bool operator==(const MlpSpec& o) const = default;

    void validate() const {
        if (input_dim < 1 || output_dim < 1) throw ShapeError("MlpSpec: dims must be >= 1");
        for (int h : hidden)
            if (h < 1) throw ShapeError("MlpSpec: hidden widths must be >= 1");
    }

    /// Planner network: 17 inputs, 10 hidden layers of 100 units, 9 outputs.
    static MlpSpec planner() { return {17, std::vector<int>(10, 100), 9, Activation::kRelu}; }
    /// Controller network: 12 inputs, 10 hidden layers of 40 units, 3 outputs.
    static MlpSpec controller() { return {12, std::vector<int>(10, 40), 3, Activation::kRelu}; }
};

/// Fully-connected network, 64-bit parameters. Hidden layers use the chosen
/// activation, the output layer is linear.
struct Mlp {
    MlpSpec spec;
    std::vector<Eigen::MatrixXd> w;  // w[l]: out x in
    std::vector<Eigen::VectorXd> b;

    int num_layers() const { return static_cast<int>(w.size()); }

    bool finite() const {
        for (const auto& m : w)
            if (!m.allFinite()) return false;
        for (const auto& v : b)
            if (!v.allFinite()) return false;
        return true;
    }
};

/// He-uniform hidden layers (scaled by fan-in), zero biases, zero output
/// layer, seeded. Zeroing the head makes the initial function identically
/// zero, so runs that train in different input/output parametrizations start
/// from the same loss.
inline Mlp make_mlp(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Mlp net;
    net.spec = spec;
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden) dims.push_back(h);
    dims.push_back(spec.output_dim);
    Rng rng(derive_seed(seed, 0xA11CE));
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l], out = dims[l + 1];
        const bool head = l + 2 == dims.size();
        const double bound = head ? 0.0 : std::sqrt(6.0 / in);
        Eigen::MatrixXd wm(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) wm(i, j) = head ? 0.0 : rng.uniform(-bound, bound);
        net.w.push_back(std::move(wm));
        net.b.push_back(Eigen::VectorXd::Zero(out));
    }
    return net;
}

namespace detail {
inline void apply_activation(Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::kRelu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh().matrix();
}
}  // namespace detail

/// Batched forward pass; columns are samples.
inline Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& x) {
    if (x.rows() != net.spec.input_dim)
        throw ShapeError("forward: input dim " + std::to_string(x.rows()) + " != spec " +
                         std::to_string(net.spec.input_dim));
    Eigen::MatrixXd h = x;
    const int last = net.num_layers() - 1;
    for (int l = 0; l <= last; ++l) {
        Eigen::MatrixXd z = (net.w[l] * h).colwise() + net.b[l];
        if (l < last) detail::apply_activation(z, net.spec.activation);
        h = std::move(z);
    }
    return h;
}

inline Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x) {
    return forward_batch(net, x);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct PlannerLossWeights {
    double w_p = 4.0;
    double w_v = 2.0;
    double w_a = 1.0;
    double weight_decay = 1e-4;  // the "+ g" term, explicit L2 on weights
};

struct ControllerLossWeights {
    double w_thr = 1.0;
    double w_eul = 57.3;
    double weight_decay = 1e-4;
};

inline double weight_norm_sq(const Mlp& net) {
    double s = 0.0;
    for (const auto& m : net.w) s += m.squaredNorm();
    return s;
}

/// Weighted MSE on the 9-vector (dp 3, v 3, a 3) plus the weight-decay term.
/// grad_pred, when non-null, receives d(loss)/d(pred) (decay excluded).
inline double planner_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& label,
                           const PlannerLossWeights& w, const Mlp& params,
                           Eigen::VectorXd* grad_pred = nullptr) {
    if (pred.size() != 9 || label.size() != 9) throw ShapeError("planner_loss: expected 9-vectors");
    const Eigen::VectorXd r = pred - label;
    double loss = w.w_p * r.segment<3>(0).squaredNorm() + w.w_v * r.segment<3>(3).squaredNorm() +
                  w.w_a * r.segment<3>(6).squaredNorm();
    loss += w.weight_decay * weight_norm_sq(params);
    if (grad_pred != nullptr) {
        grad_pred->resize(9);
        grad_pred->segment<3>(0) = 2.0 * w.w_p * r.segment<3>(0);
        grad_pred->segment<3>(3) = 2.0 * w.w_v * r.segment<3>(3);
        grad_pred->segment<3>(6) = 2.0 * w.w_a * r.segment<3>(6);
    }
    return loss;
}

/// The controller cost: w_thr |mu_l - mu_p| + w_eul e(labels, pred) + decay,
/// with e the geodesic angle between the two commanded attitudes. Absolute
/// thrust error as printed; subgradient 0 at the kinks.
inline double controller_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& label,
                              const ControllerLossWeights& w, const Mlp& params,
                              Eigen::VectorXd* grad_pred = nullptr) {
    if (pred.size() != 3 || label.size() != 3) throw ShapeError("controller_loss: expected 3-vectors");
    const double phi_p = pred(0), theta_p = pred(1), mu_p = pred(2);
    const double phi_l = label(0), theta_l = label(1), mu_l = label(2);
    const double e = euler_error(phi_l, theta_l, phi_p, theta_p);
    double loss = w.w_thr * std::abs(mu_l - mu_p) + w.w_eul * e;
    loss += w.weight_decay * weight_norm_sq(params);
    if (grad_pred != nullptr) {
        grad_pred->resize(3);
        double de_dphi = 0.0, de_dtheta = 0.0;
        euler_error_grad(phi_l, theta_l, phi_p, theta_p, &de_dphi, &de_dtheta);
        (*grad_pred)(0) = w.w_eul * de_dphi;
        (*grad_pred)(1) = w.w_eul * de_dtheta;
        const double d = mu_p - mu_l;
        (*grad_pred)(2) = d > 0.0 ? w.w_thr : (d < 0.0 ? -w.w_thr : 0.0);
    }
    return loss;
}

enum class LossKind { kPlanner, kController };

struct LossConfig {
    LossKind kind = LossKind::kPlanner;
    PlannerLossWeights planner;
    ControllerLossWeights controller;

    double weight_decay() const {
        return kind == LossKind::kPlanner ? planner.weight_decay : controller.weight_decay;
    }
};

/// Parameter-shaped gradient buffers.
struct Grad {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;

    static Grad zeros_like(const Mlp& net) {
        Grad g;
        for (size_t l = 0; l < net.w.size(); ++l) {
            g.w.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
            g.b.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
        }
        return g;
    }
    void add(const Grad& o) {
        for (size_t l = 0; l < w.size(); ++l) {
            w[l] += o.w[l];
            b[l] += o.b[l];
        }
    }
    void scale(double s) {
        for (size_t l = 0; l < w.size(); ++l) {
            w[l] *= s;
            b[l] *= s;
        }
    }
};

namespace detail {

/// Forward + backprop over one chunk of columns; accumulates the summed
/// (not yet averaged) loss and parameter gradient of the data term.
/// `block_weights`, when present (3 x batch), multiplies the planner loss's
/// position/velocity/acceleration blocks per sample; training through a
/// fixed output rescaling reduces to exactly such weights.
inline double backward_chunk(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const LossConfig& cfg, Grad* grad,
                             const Eigen::MatrixXd* block_weights = nullptr) {
    const int last = net.num_layers() - 1;
    const int batch = static_cast<int>(x.cols());

    std::vector<Eigen::MatrixXd> acts;  // post-activation per layer, acts[0] = input
    acts.reserve(last + 2);
    acts.push_back(x);
    for (int l = 0; l <= last; ++l) {
        Eigen::MatrixXd z = (net.w[l] * acts.back()).colwise() + net.b[l];
        if (l < last) apply_activation(z, net.spec.activation);
        acts.push_back(std::move(z));
    }

    // Loss gradients at the output. The planner path is vectorized; it is
    // the hot loop of imitation training.
    const Eigen::MatrixXd& out = acts.back();
    Eigen::MatrixXd delta(out.rows(), batch);
    double loss_sum = 0.0;
    if (cfg.kind == LossKind::kPlanner) {
        const PlannerLossWeights& w = cfg.planner;
        const Eigen::MatrixXd r = out - y;
        const double wb[3] = {w.w_p, w.w_v, w.w_a};
        for (int b = 0; b < 3; ++b) {
            const auto rb = r.middleRows<3>(3 * b);
            if (block_weights == nullptr) {
                loss_sum += wb[b] * rb.squaredNorm();
                delta.middleRows<3>(3 * b) = (2.0 * wb[b]) * rb;
            } else {
                const auto cw = block_weights->row(b).array();
                loss_sum += wb[b] * (rb.colwise().squaredNorm().transpose().array() * cw.transpose()).sum();
                delta.middleRows<3>(3 * b) =
                    (2.0 * wb[b]) * (rb.array().rowwise() * cw).matrix();
            }
        }
    } else {
        const ControllerLossWeights& w = cfg.controller;
        for (int i = 0; i < batch; ++i) {
            const double phi_p = out(0, i), theta_p = out(1, i), mu_p = out(2, i);
            const double phi_l = y(0, i), theta_l = y(1, i), mu_l = y(2, i);
            loss_sum += w.w_thr * std::abs(mu_l - mu_p) +
                        w.w_eul * euler_error(phi_l, theta_l, phi_p, theta_p);
            double de_dphi = 0.0, de_dtheta = 0.0;
            euler_error_grad(phi_l, theta_l, phi_p, theta_p, &de_dphi, &de_dtheta);
            delta(0, i) = w.w_eul * de_dphi;
            delta(1, i) = w.w_eul * de_dtheta;
            const double d = mu_p - mu_l;
            delta(2, i) = d > 0.0 ? w.w_thr : (d < 0.0 ? -w.w_thr : 0.0);
        }
    }
    if (!std::isfinite(loss_sum)) throw TrainingFault("backward: non-finite loss", last);

    for (int l = last; l >= 0; --l) {
        grad->w[l].noalias() += delta * acts[l].transpose();
        grad->b[l].noalias() += delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd prev_delta = net.w[l].transpose() * delta;
            if (net.spec.activation == Activation::kRelu) {
                prev_delta = (acts[l].array() > 0.0).select(prev_delta, 0.0);
            } else {
                prev_delta.array() *= 1.0 - acts[l].array().square();
            }
            if (!prev_delta.allFinite()) throw TrainingFault("backward: non-finite gradient", l);
            delta = std::move(prev_delta);
        }
    }
    return loss_sum;
}

}  // namespace detail

struct BackwardOptions {
    int chunk = 512;   // canonical chunk size; the reduction order is fixed
    int workers = 1;   // threads across chunks; result is identical for any count
};

/// Mean-batch loss and its gradient w.r.t. all parameters, including the
/// weight-decay term. The batch is processed in fixed-size chunks reduced in
/// index order, so the result is bit-identical for any worker count.
inline double backward(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       const LossConfig& cfg, Grad* grad, const BackwardOptions& opts = {},
                       const Eigen::MatrixXd* block_weights = nullptr) {
    if (x.cols() == 0) throw std::invalid_argument("backward: empty batch");
    if (x.cols() != y.cols()) throw ShapeError("backward: input/label count mismatch");
    const int batch = static_cast<int>(x.cols());
    const int chunk = std::max(1, opts.chunk);
    const int n_chunks = (batch + chunk - 1) / chunk;

    std::vector<Grad> partial(n_chunks);
    std::vector<double> losses(n_chunks, 0.0);
    std::exception_ptr fault;
    std::mutex fault_mu;

    auto run_range = [&](int begin, int end) {
        for (int c = begin; c < end; ++c) {
            try {
                partial[c] = Grad::zeros_like(net);
                const int lo = c * chunk;
                const int n = std::min(chunk, batch - lo);
                const Eigen::MatrixXd bw_chunk =
                    block_weights != nullptr ? block_weights->middleCols(lo, n) : Eigen::MatrixXd();
                losses[c] = detail::backward_chunk(net, x.middleCols(lo, n), y.middleCols(lo, n),
                                                   cfg, &partial[c],
                                                   block_weights != nullptr ? &bw_chunk : nullptr);
            } catch (...) {
                std::lock_guard<std::mutex> lk(fault_mu);
                if (!fault) fault = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::max(1, std::min(opts.workers, n_chunks));
    if (workers == 1) {
        run_range(0, n_chunks);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            const int lo = n_chunks * t / workers;
            const int hi = n_chunks * (t + 1) / workers;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    if (fault) std::rethrow_exception(fault);

    *grad = Grad::zeros_like(net);
    double loss = 0.0;
    for (int c = 0; c < n_chunks; ++c) {
        grad->add(partial[c]);
        loss += losses[c];
    }
    grad->scale(1.0 / batch);
    loss /= batch;

    const double g = cfg.weight_decay();
    if (g != 0.0) {
        loss += g * weight_norm_sq(net);
        for (size_t l = 0; l < net.w.size(); ++l) grad->w[l] += 2.0 * g * net.w[l];
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

inline void sgd_step(Mlp& net, const Grad& grad, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be positive");
    for (size_t l = 0; l < net.w.size(); ++l) {
        net.w[l] -= lr * grad.w[l];
        net.b[l] -= lr * grad.b[l];
    }
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros_like(const Mlp& net) {
        AdamState s;
        for (size_t l = 0; l < net.w.size(); ++l) {
            s.mw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
            s.vw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
            s.mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
            s.vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
        }
        return s;
    }
};

inline void adam_step(Mlp& net, const Grad& grad, double lr, AdamState& state) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t l = 0; l < net.w.size(); ++l) {
        state.mw[l] = state.beta1 * state.mw[l] + (1.0 - state.beta1) * grad.w[l];
        state.vw[l] = state.beta2 * state.vw[l] +
                      (1.0 - state.beta2) * grad.w[l].array().square().matrix();
        state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grad.b[l];
        state.vb[l] = state.beta2 * state.vb[l] +
                      (1.0 - state.beta2) * grad.b[l].array().square().matrix();
        net.w[l].array() -= lr * (state.mw[l].array() / bc1) /
                            ((state.vw[l].array() / bc2).sqrt() + state.eps);
        net.b[l].array() -= lr * (state.mb[l].array() / bc1) /
                            ((state.vb[l].array() / bc2).sqrt() + state.eps);
    }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O: little-endian binary, magic "MLPC", version, spec, then
// row-major weights and biases per layer.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw CheckpointError("checkpoint: truncated file");
    return v;
}
inline void write_doubles(std::ostream& os, const double* p, size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}
inline void read_doubles(std::istream& is, double* p, size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw CheckpointError("checkpoint: truncated file");
}

}  // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const Mlp& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
    os.write("MLPC", 4);
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(net.spec.input_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(net.spec.hidden.size()));
    for (int h : net.spec.hidden) detail::write_u32(os, static_cast<std::uint32_t>(h));
    detail::write_u32(os, static_cast<std::uint32_t>(net.spec.output_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(net.spec.activation));
    for (size_t l = 0; l < net.w.size(); ++l) {
        // Row-major on disk; Eigen matrices are column-major in memory.
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = net.w[l];
        detail::write_doubles(os, rm.data(), static_cast<size_t>(rm.size()));
        detail::write_doubles(os, net.b[l].data(), static_cast<size_t>(net.b[l].size()));
    }
    if (!os) throw CheckpointError("checkpoint: write failed for " + path);
}

inline Mlp load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MLPC", 4) != 0)
        throw CheckpointError("checkpoint: bad magic in " + path);
    const std::uint32_t version = detail::read_u32(is);
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    MlpSpec spec;
    spec.input_dim = static_cast<int>(detail::read_u32(is));
    const std::uint32_t n_hidden = detail::read_u32(is);
    if (n_hidden > 1024) throw CheckpointError("checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < n_hidden; ++i)
        spec.hidden.push_back(static_cast<int>(detail::read_u32(is)));
    spec.output_dim = static_cast<int>(detail::read_u32(is));
    spec.activation = static_cast<Activation>(detail::read_u32(is));
    spec.validate();

    Mlp net;
    net.spec = spec;
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden) dims.push_back(h);
    dims.push_back(spec.output_dim);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(dims[l + 1], dims[l]);
        detail::read_doubles(is, rm.data(), static_cast<size_t>(rm.size()));
        net.w.emplace_back(rm);
        Eigen::VectorXd bias(dims[l + 1]);
        detail::read_doubles(is, bias.data(), static_cast<size_t>(bias.size()));
        net.b.push_back(std::move(bias));
    }
    is.peek();
    if (!is.eof()) throw CheckpointError("checkpoint: trailing bytes in " + path);
    return net;
}

/// Loads a checkpoint and rejects it unless its spec matches `expected`.
inline Mlp load_checkpoint(const std::string& path, const MlpSpec& expected) {
    Mlp net = load_checkpoint(path);
    if (!(net.spec == expected)) throw CheckpointError("checkpoint: spec mismatch for " + path);
    return net;
}

}  // namespace gapflight
