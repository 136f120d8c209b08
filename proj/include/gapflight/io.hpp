#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapflight/dataset.hpp"
#include "gapflight/finetune.hpp"
#include "gapflight/mission.hpp"
#include "gapflight/policy.hpp"
#include "gapflight/sim.hpp"
#include "gapflight/train.hpp"
#include "gapflight/version.hpp"

namespace gapflight {

/// Provenance stamped into every artifact file.
struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::string comment_line() const {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "# gapflight %s config=%016llx seed=%llu", kVersion,
                      static_cast<unsigned long long>(config_hash),
                      static_cast<unsigned long long>(seed));
        return buf;
    }
    nlohmann::json json() const {
        char hex[24];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
        return {{"version", kVersion}, {"config_hash", hex}, {"seed", seed}};
    }
};

namespace detail_io {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    return os;
}

/// Strips a trailing .csv for sidecar naming.
inline std::string sidecar_path(const std::string& csv_path) {
    std::string base = csv_path;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
        base = base.substr(0, base.size() - 4);
    return base + ".meta.json";
}

}  // namespace detail_io

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "t,px,py,pz,vx,vy,vz,ax,ay,az,roll,pitch,yaw,wx,wy,wz,cmd_roll,cmd_pitch,cmd_thrust,event";

inline void write_trace_csv(const Trace& trace, const std::string& path, const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << kTraceHeader << "\n";
    using detail_io::num;
    for (size_t i = 0; i < trace.states.size(); ++i) {
        const FullState& s = trace.states[i];
        const AttitudeThrustCmd& c = trace.commands[i];
        std::string event;
        for (const auto& ev : trace.events)
            if (std::abs(ev.t - s.t) < trace.dt / 2.0)
                event = event.empty() ? to_string(ev.kind) : event + "|" + to_string(ev.kind);
        os << num(s.t) << ',' << num(s.p.x()) << ',' << num(s.p.y()) << ',' << num(s.p.z()) << ','
           << num(s.v.x()) << ',' << num(s.v.y()) << ',' << num(s.v.z()) << ',' << num(s.a.x())
           << ',' << num(s.a.y()) << ',' << num(s.a.z()) << ',' << num(s.att.x()) << ','
           << num(s.att.y()) << ',' << num(s.att.z()) << ',' << num(s.omega.x()) << ','
           << num(s.omega.y()) << ',' << num(s.omega.z()) << ',' << num(c.roll) << ','
           << num(c.pitch) << ',' << num(c.thrust) << ',' << event << "\n";
    }
}

// ---------------------------------------------------------------------------
// Dataset CSVs + meta sidecars
// ---------------------------------------------------------------------------

inline constexpr const char* kPlannerDatasetHeader =
    "t,vbar,dpx,dpy,dpz,vsx,vsy,vsz,asx,asy,asz,vex,vey,vez,aex,aey,aez,"
    "label_dpx,label_dpy,label_dpz,label_vx,label_vy,label_vz,label_ax,label_ay,label_az";

inline constexpr const char* kControllerDatasetHeader =
    "epx,epy,epz,evx,evy,evz,eax,eay,eaz,roll,pitch,yaw,label_roll,label_pitch,label_thrust";

inline void write_planner_dataset(const PlannerDataset& ds, const std::string& path,
                                  const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << kPlannerDatasetHeader << "\n";
    using detail_io::num;
    for (const PlannerSample& s : ds.samples) {
        for (int i = 0; i < 17; ++i) os << num(s.x[i]) << ',';
        for (int i = 0; i < 9; ++i) os << num(s.y[i]) << (i == 8 ? '\n' : ',');
    }

    nlohmann::json meta;
    meta["provenance"] = prov.json();
    meta["kind"] = "planner";
    meta["n_trajectories"] = ds.n_traj;
    meta["points_per_traj"] = ds.points_per_traj;
    meta["n_samples"] = ds.samples.size();
    meta["n_rejected_trajectories"] = ds.n_rejected;
    meta["retention"] = ds.retention();
    meta["dataset_seed"] = ds.seed;
    meta["ranges"] = {{"dp", ds.ranges.dp},
                      {"v", ds.ranges.v},
                      {"a", ds.ranges.a},
                      {"vbar_min", ds.ranges.vbar_min},
                      {"vbar_max", ds.ranges.vbar_max},
                      {"reject_v", ds.ranges.reject_v},
                      {"reject_a", ds.ranges.reject_a}};
    auto ms = detail_io::open_out(detail_io::sidecar_path(path));
    ms << meta.dump(2) << "\n";
}

inline void write_controller_dataset(const ControllerDataset& ds, const std::string& path,
                                     const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << kControllerDatasetHeader << "\n";
    using detail_io::num;
    for (const ControllerSample& s : ds.samples) {
        for (int i = 0; i < 12; ++i) os << num(s.x[i]) << ',';
        for (int i = 0; i < 3; ++i) os << num(s.y[i]) << (i == 2 ? '\n' : ',');
    }

    nlohmann::json meta;
    meta["provenance"] = prov.json();
    meta["kind"] = "controller";
    meta["n_samples"] = ds.samples.size();
    meta["n_resampled"] = ds.n_resampled;
    meta["dataset_seed"] = ds.seed;
    meta["ranges"] = {{"e_p", ds.ranges.e_p},
                      {"e_v", ds.ranges.e_v},
                      {"e_a", ds.ranges.e_a},
                      {"euler_deg", ds.ranges.euler_deg}};
    meta["gains"] = {{"kp", {ds.gains.k_p.x(), ds.gains.k_p.y(), ds.gains.k_p.z()}},
                     {"kv", {ds.gains.k_v.x(), ds.gains.k_v.y(), ds.gains.k_v.z()}}};
    auto ms = detail_io::open_out(detail_io::sidecar_path(path));
    ms << meta.dump(2) << "\n";
}

namespace detail_io {

inline std::vector<std::vector<double>> read_csv_rows(const std::string& path, int expect_cols,
                                                      const char* expect_header) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != expect_header)
                throw std::runtime_error("unexpected header in " + path);
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(expect_cols);
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != expect_cols)
            throw std::runtime_error("bad column count in " + path);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail_io

inline PlannerDataset read_planner_dataset(const std::string& path) {
    PlannerDataset ds;
    for (const auto& row : detail_io::read_csv_rows(path, 26, kPlannerDatasetHeader)) {
        PlannerSample s;
        for (int i = 0; i < 17; ++i) s.x[i] = row[i];
        for (int i = 0; i < 9; ++i) s.y[i] = row[17 + i];
        ds.samples.push_back(s);
    }
    // Recover the trajectory grouping from the sidecar when present.
    std::ifstream ms(detail_io::sidecar_path(path));
    if (ms) {
        nlohmann::json meta = nlohmann::json::parse(ms, nullptr, false);
        if (!meta.is_discarded() && meta.contains("points_per_traj")) {
            ds.points_per_traj = meta["points_per_traj"].get<int>();
            ds.n_traj = meta["n_trajectories"].get<int>();
            if (meta.contains("dataset_seed")) ds.seed = meta["dataset_seed"].get<std::uint64_t>();
        }
    }
    if (ds.points_per_traj <= 0) {
        ds.points_per_traj = 1;
        ds.n_traj = static_cast<int>(ds.samples.size());
    }
    return ds;
}

inline ControllerDataset read_controller_dataset(const std::string& path) {
    ControllerDataset ds;
    for (const auto& row : detail_io::read_csv_rows(path, 15, kControllerDatasetHeader)) {
        ControllerSample s;
        for (int i = 0; i < 12; ++i) s.x[i] = row[i];
        for (int i = 0; i < 3; ++i) s.y[i] = row[12 + i];
        ds.samples.push_back(s);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Curves and tables
// ---------------------------------------------------------------------------

inline void write_loss_curve(const std::vector<LossCurvePoint>& curve, const std::string& path,
                             const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << "epoch,train_loss,test_loss\n";
    for (const auto& p : curve)
        os << p.epoch << ',' << detail_io::num(p.train_loss) << ',' << detail_io::num(p.test_loss)
           << "\n";
}

inline void write_reward_curve(const std::vector<FinetunePoint>& curve, const std::string& path,
                               const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << "iter,mean_return,best_return\n";
    for (const auto& p : curve)
        os << p.iter << ',' << detail_io::num(p.mean_return) << ','
           << detail_io::num(p.best_return) << "\n";
}

struct CompareRow {
    std::string mode;
    std::uint64_t seed = 0;
    double avg_omega = 0.0;
    double avg_thrust = 0.0;
    double miss = 0.0;
    bool collided = false;
};

inline void write_compare_table(const std::vector<CompareRow>& rows, const std::string& path,
                                const Provenance& prov) {
    auto os = detail_io::open_out(path);
    os << prov.comment_line() << "\n" << "mode,seed,avg_omega,avg_thrust,miss,collided\n";
    for (const auto& r : rows)
        os << r.mode << ',' << r.seed << ',' << detail_io::num(r.avg_omega) << ','
           << detail_io::num(r.avg_thrust) << ',' << detail_io::num(r.miss) << ','
           << (r.collided ? 1 : 0) << "\n";
}

// ---------------------------------------------------------------------------
// Mission metrics JSON
// ---------------------------------------------------------------------------

inline nlohmann::json metrics_json(const MissionResult& result, ControlMode mode,
                                   const Provenance& prov) {
    const MissionMetrics& m = result.metrics;
    nlohmann::json j;
    j["provenance"] = prov.json();
    j["mode"] = to_string(mode);
    j["crossed"] = m.crossed;
    j["collided"] = m.collided;
    j["out_of_bounds"] = m.out_of_bounds;
    j["recover_feasible"] = m.recover_feasible;
    if (std::isfinite(m.miss_distance)) j["miss_distance_m"] = m.miss_distance;
    if (std::isfinite(m.crossing_att_err))
        j["crossing_attitude_error_deg"] = m.crossing_att_err * 180.0 / M_PI;
    j["avg_angular_velocity"] = m.avg_omega;
    j["avg_thrust"] = m.avg_thrust;
    j["thrust_clamps"] = m.thrust_clamps;
    j["ff_latency_ms"] = {{"p50", m.ff_latency_ms_p50}, {"p99", m.ff_latency_ms_p99}};
    if (result.plan.learned_endpoint_error.has_value())
        j["planner_endpoint_error_m"] = *result.plan.learned_endpoint_error;
    return j;
}

// ---------------------------------------------------------------------------
// Policy manifest
// ---------------------------------------------------------------------------

inline void write_policy_manifest(const std::string& path, const std::string& planner_ckpt,
                                  const std::string& controller_ckpt, bool normalize,
                                  const Provenance& prov, double mu_max = 2.5 * kGravity) {
    nlohmann::json j;
    j["provenance"] = prov.json();
    j["planner_checkpoint"] = planner_ckpt;
    j["controller_checkpoint"] = controller_ckpt;
    j["normalize"] = normalize;
    j["mu_max"] = mu_max;
    j["wiring_version"] = kPolicyWiringVersion;
    // 29 policy inputs = 17 planner inputs + 9 current-state dims; the
    // current Euler attitude is carried alongside for the controller half.
    j["obs_layout"] = "planner17+state9, attitude companion";
    auto os = detail_io::open_out(path);
    os << j.dump(2) << "\n";
}

inline PolicyNet load_policy_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CheckpointError("policy manifest: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw CheckpointError("policy manifest: invalid JSON in " + path);
    if (j.value("wiring_version", 0u) != kPolicyWiringVersion)
        throw CheckpointError("policy manifest: unsupported wiring version");
    // Checkpoint paths are resolved relative to the manifest directory.
    std::string dir;
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash + 1);
    auto resolve = [&](const std::string& p) {
        return (!p.empty() && p.front() == '/') ? p : dir + p;
    };
    Mlp planner = load_checkpoint(resolve(j.at("planner_checkpoint").get<std::string>()),
                                  MlpSpec::planner());
    Mlp controller = load_checkpoint(resolve(j.at("controller_checkpoint").get<std::string>()),
                                     MlpSpec::controller());
    return assemble(std::move(planner), std::move(controller), j.value("normalize", true),
                    j.value("mu_max", 2.5 * kGravity));
}

}  // namespace gapflight
