// gapflight command-line harness: dataset generation, imitation training,
// mission simulation, fine-tuning and mode comparison.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gapflight/config.hpp"
#include "gapflight/io.hpp"
#include "gapflight/svg.hpp"

namespace gf = gapflight;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFault = 1;   // numeric / training fault
constexpr int kExitUsage = 2;   // usage error or missing input

struct Common {
    std::string config_path;
    std::uint64_t seed = 0;

    gf::RunConfig load() const {
        return config_path.empty() ? gf::RunConfig::defaults()
                                   : gf::RunConfig::from_file(config_path);
    }
};

std::string replace_ext(const std::string& path, const std::string& ext) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
    return path.substr(0, dot) + ext;
}

int cmd_gen_data(const Common& common, const std::string& kind, int n, int points,
                 const std::string& range, const std::string& out) {
    const gf::RunConfig cfg = common.load();
    const gf::Provenance prov{cfg.hash(common.seed), common.seed};
    if (kind == "planner") {
        const int ppt = points > 0 ? points : cfg.points_per_traj;
        const gf::PlannerDataset ds =
            gf::gen_planner_dataset(n, ppt, cfg.planner_ranges, common.seed);
        gf::write_planner_dataset(ds, out, prov);
        std::printf("planner dataset: %d trajectories x %d points, retention %.3f -> %s\n",
                    ds.n_traj, ds.points_per_traj, ds.retention(), out.c_str());
    } else if (kind == "controller") {
        gf::ControllerRanges ranges = range == "large" ? gf::ControllerRanges::large_range()
                                                       : gf::ControllerRanges::short_range();
        const gf::ControllerDataset ds =
            gf::gen_controller_dataset(ranges, n, common.seed, cfg.gains);
        gf::write_controller_dataset(ds, out, prov);
        std::printf("controller dataset: %zu samples (%s range, %d resampled) -> %s\n",
                    ds.samples.size(), range.c_str(), ds.n_resampled, out.c_str());
    } else {
        std::fprintf(stderr, "gen-data: unknown kind '%s'\n", kind.c_str());
        return kExitUsage;
    }
    return kExitOk;
}

int cmd_train(const Common& common, const std::string& net, const std::string& setting_str,
              const std::string& data, int epochs, double lr, int batch, const std::string& out,
              std::string curve_path, bool quiet) {
    gf::RunConfig cfg = common.load();
    cfg.train.epochs = epochs;
    cfg.train.lr = lr;
    cfg.train.batch_size = batch;
    cfg.train.seed = common.seed;
    const gf::Provenance prov{cfg.hash(common.seed), common.seed};
    if (curve_path.empty()) curve_path = replace_ext(out, ".loss_curve.csv");

    std::vector<gf::LossCurvePoint> curve;
    cfg.train.on_epoch = [&](const gf::LossCurvePoint& pt) {
        curve.push_back(pt);
        if (!quiet)
            std::printf("epoch %d: train %.6g test %.6g\n", pt.epoch, pt.train_loss, pt.test_loss);
    };

    try {
        gf::TrainResult result;
        if (net == "planner") {
            const gf::TrainSetting setting = gf::parse_setting(setting_str);
            result = gf::train_planner(gf::read_planner_dataset(data), gf::MlpSpec::planner(),
                                       setting, cfg.train);
        } else if (net == "controller") {
            result = gf::train_controller(gf::read_controller_dataset(data),
                                          gf::MlpSpec::controller(), cfg.train);
        } else {
            std::fprintf(stderr, "train: unknown net '%s'\n", net.c_str());
            return kExitUsage;
        }
        gf::save_checkpoint(result.net, out);
        gf::write_loss_curve(result.curve, curve_path, prov);
        if (!result.curve.empty())
            std::printf("final: train %.6g test %.6g -> %s\n", result.curve.back().train_loss,
                        result.curve.back().test_loss, out.c_str());
        else
            std::printf("no epochs run; checkpoint equals initialization -> %s\n", out.c_str());
        return kExitOk;
    } catch (const gf::TrainingFault& e) {
        gf::write_loss_curve(curve, curve_path, prov);
        std::fprintf(stderr, "train: diverged at epoch %d (%s); curve-so-far saved to %s\n",
                     e.index, e.what(), curve_path.c_str());
        return kExitFault;
    }
}

int cmd_fly(const Common& common, const std::string& mode_str, double tilt_deg, double v_cross,
            const std::string& policy_path, const std::string& trace_path,
            const std::string& plot_path, std::string metrics_path) {
    gf::RunConfig cfg = common.load();
    if (tilt_deg >= 0.0) cfg.gap.tilt = tilt_deg * M_PI / 180.0;
    if (v_cross > 0.0) cfg.mission.v_cross = v_cross;
    const gf::ControlMode mode = gf::parse_mode(mode_str);
    const gf::Provenance prov{cfg.hash(common.seed), common.seed};

    gf::PolicyNet policy;
    gf::PolicyNet* policy_ptr = nullptr;
    if (mode != gf::ControlMode::kTraditional) {
        if (policy_path.empty() || !fs::exists(policy_path)) {
            std::fprintf(stderr, "fly: mode %s needs --policy <manifest.json>%s\n",
                         mode_str.c_str(),
                         policy_path.empty() ? "" : (" (missing: " + policy_path + ")").c_str());
            return kExitUsage;
        }
        policy = gf::load_policy_manifest(policy_path);
        policy_ptr = &policy;
    }

    const gf::MissionResult result =
        gf::run_mission(mode, cfg.scenario(), policy_ptr, cfg.mission, cfg.sim, cfg.gains);

    if (!trace_path.empty()) gf::write_trace_csv(result.trace, trace_path, prov);
    if (!plot_path.empty())
        gf::write_mission_plot(result.trace, cfg.scenario(), plot_path,
                               prov.comment_line().substr(2));
    if (metrics_path.empty() && !trace_path.empty())
        metrics_path = replace_ext(trace_path, ".metrics.json");
    nlohmann::json mj = gf::metrics_json(result, mode, prov);
    if (!metrics_path.empty()) {
        std::ofstream os(metrics_path, std::ios::trunc);
        os << mj.dump(2) << "\n";
    }
    std::printf("%s\n", mj.dump(2).c_str());
    return kExitOk;
}

int cmd_finetune(const Common& common, const std::string& policy_path, const std::string& out,
                 int iters, double sigma, double lr, int batch_episodes, double tilt_deg,
                 bool fixed_scenario, std::string curve_path) {
    gf::RunConfig cfg = common.load();
    if (tilt_deg >= 0.0) cfg.gap.tilt = tilt_deg * M_PI / 180.0;
    if (!fs::exists(policy_path)) {
        std::fprintf(stderr, "finetune: missing policy manifest %s\n", policy_path.c_str());
        return kExitUsage;
    }
    const gf::Provenance prov{cfg.hash(common.seed), common.seed};
    if (curve_path.empty()) curve_path = replace_ext(out, ".reward_curve.csv");

    gf::PolicyNet policy = gf::load_policy_manifest(policy_path);
    gf::FinetuneOptions opts = cfg.finetune;
    opts.iters = iters;
    if (sigma >= 0.0) opts.sigma = sigma;
    if (lr >= 0.0) opts.lr = lr;
    if (batch_episodes > 0) opts.batch_episodes = batch_episodes;
    opts.seed = common.seed;
    opts.randomize_scenarios = !fixed_scenario && opts.randomize_scenarios;

    const gf::FinetuneResult result =
        gf::finetune(policy, cfg.scenario(), cfg.reward, opts, cfg.mission, cfg.sim);

    const std::string planner_ckpt = replace_ext(out, ".planner.ckpt");
    const std::string controller_ckpt = replace_ext(out, ".controller.ckpt");
    gf::save_checkpoint(result.policy.planner(), planner_ckpt);
    gf::save_checkpoint(result.policy.controller(), controller_ckpt);
    const auto base_name = [](const std::string& p) {
        const auto slash = p.find_last_of('/');
        return slash == std::string::npos ? p : p.substr(slash + 1);
    };
    gf::write_policy_manifest(out, base_name(planner_ckpt), base_name(controller_ckpt),
                              result.policy.normalization_enabled(), prov, result.policy.mu_max());
    gf::write_reward_curve(result.curve, curve_path, prov);
    if (!result.curve.empty())
        std::printf("finetune: %d iters, mean return %.6g -> %.6g\n", iters,
                    result.curve.front().mean_return, result.curve.back().mean_return);
    else
        std::printf("finetune: 0 iters, policy unchanged\n");
    return kExitOk;
}

int cmd_eval_compare(const Common& common, const std::string& policy_path,
                     const std::string& policy_rl_path, int n_scenarios, const std::string& out) {
    gf::RunConfig cfg = common.load();
    const gf::Provenance prov{cfg.hash(common.seed), common.seed};

    gf::PolicyNet policy_e2e, policy_rl;
    gf::PolicyNet* e2e_ptr = nullptr;
    gf::PolicyNet* rl_ptr = nullptr;
    if (!policy_path.empty()) {
        if (!fs::exists(policy_path)) {
            std::fprintf(stderr, "eval-compare: missing policy manifest %s\n", policy_path.c_str());
            return kExitUsage;
        }
        policy_e2e = gf::load_policy_manifest(policy_path);
        e2e_ptr = &policy_e2e;
    }
    if (!policy_rl_path.empty()) {
        if (!fs::exists(policy_rl_path)) {
            std::fprintf(stderr, "eval-compare: missing policy manifest %s\n",
                         policy_rl_path.c_str());
            return kExitUsage;
        }
        policy_rl = gf::load_policy_manifest(policy_rl_path);
        rl_ptr = &policy_rl;
    }

    std::vector<gf::CompareRow> rows;
    for (int s = 0; s < n_scenarios; ++s) {
        const std::uint64_t scenario_seed = gf::derive_seed(common.seed, 9000 + s);
        gf::Rng rng(scenario_seed);
        gf::Scenario sc = cfg.finetune.randomization.draw(cfg.scenario(), rng);
        struct ModeRun {
            const char* name;
            gf::ControlMode mode;
            gf::PolicyNet* policy;
        } runs[] = {{"TR", gf::ControlMode::kTraditional, nullptr},
                    {"E2E", gf::ControlMode::kEndToEnd, e2e_ptr},
                    {"RL", gf::ControlMode::kReinforced, rl_ptr}};
        for (const auto& run : runs) {
            if (run.mode != gf::ControlMode::kTraditional && run.policy == nullptr) continue;
            const gf::MissionResult r =
                gf::run_mission(run.mode, sc, run.policy, cfg.mission, cfg.sim, cfg.gains);
            gf::CompareRow row;
            row.mode = run.name;
            row.seed = scenario_seed;
            row.avg_omega = r.metrics.avg_omega;
            row.avg_thrust = r.metrics.avg_thrust;
            row.miss = std::isfinite(r.metrics.miss_distance) ? r.metrics.miss_distance : -1.0;
            row.collided = r.metrics.collided;
            rows.push_back(row);
        }
    }
    gf::write_compare_table(rows, out, prov);
    std::printf("eval-compare: %zu rows -> %s\n", rows.size(), out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gapflight: quadrotor narrow-gap planning, imitation and fine-tuning"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "TOML run configuration");
    app.add_option("--seed", common.seed, "master seed for all randomness");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a labeled dataset");
    gen->fallthrough();
    std::string gd_kind = "planner", gd_range = "short", gd_out = "dataset.csv";
    int gd_n = 100, gd_points = 0;
    gen->add_option("--kind", gd_kind, "planner|controller");
    gen->add_option("--n", gd_n, "trajectories (planner) or samples (controller)");
    gen->add_option("--points", gd_points, "points per trajectory (planner)");
    gen->add_option("--range", gd_range, "short|large (controller)");
    gen->add_option("--out", gd_out, "output CSV path");

    // train
    auto* tr = app.add_subcommand("train", "imitation-train a network");
    tr->fallthrough();
    std::string tr_net = "planner", tr_setting = "D", tr_data, tr_out = "net.ckpt", tr_curve;
    int tr_epochs = 50, tr_batch = 6000;
    double tr_lr = 1e-5;
    bool tr_quiet = false;
    tr->add_option("--net", tr_net, "planner|controller");
    tr->add_option("--setting", tr_setting, "A|B|C|D");
    tr->add_option("--data", tr_data, "dataset CSV")->required();
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--batch", tr_batch, "batch size");
    tr->add_option("--out", tr_out, "checkpoint output path");
    tr->add_option("--curve", tr_curve, "loss curve CSV path");
    tr->add_flag("--quiet", tr_quiet, "suppress per-epoch output");

    // fly
    auto* fly = app.add_subcommand("fly", "run one gap mission");
    fly->fallthrough();
    std::string fly_mode = "TR", fly_policy, fly_trace, fly_plot, fly_metrics;
    double fly_tilt = -1.0, fly_vcross = -1.0;
    fly->add_option("--mode", fly_mode, "TR|E2E|RL");
    fly->add_option("--tilt", fly_tilt, "gap tilt in degrees");
    fly->add_option("--v-cross", fly_vcross, "crossing speed m/s");
    fly->add_option("--policy", fly_policy, "policy manifest (E2E/RL)");
    fly->add_option("--trace", fly_trace, "trace CSV output");
    fly->add_option("--plot", fly_plot, "SVG plot output");
    fly->add_option("--metrics", fly_metrics, "metrics JSON output");

    // finetune
    auto* ft = app.add_subcommand("finetune", "reward fine-tuning of an assembled policy");
    ft->fallthrough();
    std::string ft_policy, ft_out = "policy_rl.json", ft_curve;
    int ft_iters = 30, ft_batch = 0;
    double ft_sigma = -1.0, ft_lr = -1.0, ft_tilt = -1.0;
    bool ft_fixed = false;
    ft->add_option("--policy", ft_policy, "input policy manifest")->required();
    ft->add_option("--out", ft_out, "output policy manifest");
    ft->add_option("--iters", ft_iters, "ES iterations");
    ft->add_option("--sigma", ft_sigma, "perturbation scale");
    ft->add_option("--lr", ft_lr, "update step size");
    ft->add_option("--batch-episodes", ft_batch, "episode evaluations per iteration");
    ft->add_option("--tilt", ft_tilt, "scenario tilt in degrees");
    ft->add_flag("--fixed-scenario", ft_fixed, "disable scenario randomization");
    ft->add_option("--curve", ft_curve, "reward curve CSV path");

    // eval-compare
    auto* ev = app.add_subcommand("eval-compare", "compare TR/E2E/RL over seeded scenarios");
    ev->fallthrough();
    std::string ev_policy, ev_policy_rl, ev_out = "compare.csv";
    int ev_n = 5;
    ev->add_option("--policy", ev_policy, "E2E policy manifest");
    ev->add_option("--policy-rl", ev_policy_rl, "RL policy manifest");
    ev->add_option("--scenarios", ev_n, "number of seeded scenarios");
    ev->add_option("--out", ev_out, "comparison table CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(common, gd_kind, gd_n, gd_points, gd_range, gd_out);
        if (tr->parsed())
            return cmd_train(common, tr_net, tr_setting, tr_data, tr_epochs, tr_lr, tr_batch,
                             tr_out, tr_curve, tr_quiet);
        if (fly->parsed())
            return cmd_fly(common, fly_mode, fly_tilt, fly_vcross, fly_policy, fly_trace, fly_plot,
                           fly_metrics);
        if (ft->parsed())
            return cmd_finetune(common, ft_policy, ft_out, ft_iters, ft_sigma, ft_lr, ft_batch,
                                ft_tilt, ft_fixed, ft_curve);
        if (ev->parsed())
            return cmd_eval_compare(common, ev_policy, ev_policy_rl, ev_n, ev_out);
    } catch (const gf::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const gf::CheckpointError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fault: %s\n", e.what());
        return kExitFault;
    }
    return kExitUsage;
}
