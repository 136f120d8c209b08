#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gapflight/control.hpp"
#include "gapflight/dataset.hpp"
#include "gapflight/finetune.hpp"
#include "gapflight/mission.hpp"
#include "gapflight/reward.hpp"
#include "gapflight/sim.hpp"
#include "gapflight/train.hpp"
#include "gapflight/types.hpp"
#include "gapflight/version.hpp"

namespace gapflight {

namespace toml {

using Value = std::variant<double, bool, std::string, std::vector<double>>;
using Table = std::map<std::string, std::map<std::string, Value>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Parses the TOML subset used by the run configuration: [section] headers,
/// `key = value` lines with numeric, boolean, quoted-string or numeric-array
/// values, and # comments. Dotted key names are kept verbatim.
inline Table parse(const std::string& text) {
    Table table;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        // Strip comments outside of strings.
        bool in_str = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section");
            table[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": key outside a section");

        Value parsed;
        if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
            parsed = val.substr(1, val.size() - 2);
        } else if (val == "true" || val == "false") {
            parsed = (val == "true");
        } else if (val.front() == '[') {
            if (val.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
            std::vector<double> arr;
            std::string body = val.substr(1, val.size() - 2);
            std::istringstream bs(body);
            std::string item;
            while (std::getline(bs, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                size_t used = 0;
                arr.push_back(std::stod(item, &used));
                if (used != item.size())
                    throw ConfigError("config line " + std::to_string(line_no) + ": bad number");
            }
            parsed = arr;
        } else {
            size_t used = 0;
            double d = 0.0;
            try {
                d = std::stod(val, &used);
            } catch (const std::exception&) {
                throw ConfigError("config line " + std::to_string(line_no) + ": bad value '" + val + "'");
            }
            if (used != val.size())
                throw ConfigError("config line " + std::to_string(line_no) + ": bad value '" + val + "'");
            parsed = d;
        }
        if (!table[section].emplace(key, parsed).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    return table;
}

}  // namespace toml

/// Resolved run configuration: sections sim, controller, mission, reward,
/// train, paths. Unknown keys are rejected; every artifact embeds the hash of
/// the canonical serialization plus the seed.
struct RunConfig {
    SimParams sim;
    ControlGains gains;

    // mission + scenario geometry
    MissionConfig mission;
    GapPose gap;
    Vec3 start_hover = Vec3(-3.5, 0.0, 1.2);
    LabBounds lab;
    double drone_radius = 0.15;

    RewardConfig reward;

    // training
    TrainOptions train;
    PlannerRanges planner_ranges;
    int points_per_traj = 1000;
    FinetuneOptions finetune;

    std::string out_dir = ".";

    // -- access helpers -------------------------------------------------
    Scenario scenario() const {
        Scenario s;
        s.gap = gap;
        s.start_hover = start_hover;
        s.lab = lab;
        s.drone_radius = drone_radius;
        return s;
    }

    static RunConfig defaults() { return RunConfig{}; }

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str());
    }

    static RunConfig from_text(const std::string& text);
    std::string serialize() const;
    std::uint64_t hash(std::uint64_t seed) const {
        return fnv1a(serialize() + "|seed=" + std::to_string(seed));
    }
};

namespace detail_config {

struct Reader {
    const toml::Table& table;
    std::map<std::string, std::map<std::string, bool>> consumed;

    explicit Reader(const toml::Table& t) : table(t) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = table.find(sec);
        return s != table.end() && s->second.count(key) > 0;
    }
    template <typename T>
    void get(const std::string& sec, const std::string& key, T& out) {
        auto s = table.find(sec);
        if (s == table.end()) return;
        auto k = s->second.find(key);
        if (k == s->second.end()) return;
        consumed[sec][key] = true;
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, int> ||
                      std::is_same_v<T, std::uint64_t>) {
            if (!std::holds_alternative<double>(k->second))
                throw ConfigError("config: " + sec + "." + key + " must be a number");
            out = static_cast<T>(std::get<double>(k->second));
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!std::holds_alternative<bool>(k->second))
                throw ConfigError("config: " + sec + "." + key + " must be a boolean");
            out = std::get<bool>(k->second);
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!std::holds_alternative<std::string>(k->second))
                throw ConfigError("config: " + sec + "." + key + " must be a string");
            out = std::get<std::string>(k->second);
        } else if constexpr (std::is_same_v<T, Vec3>) {
            if (!std::holds_alternative<std::vector<double>>(k->second) ||
                std::get<std::vector<double>>(k->second).size() != 3)
                throw ConfigError("config: " + sec + "." + key + " must be a 3-element array");
            const auto& a = std::get<std::vector<double>>(k->second);
            out = Vec3(a[0], a[1], a[2]);
        }
    }

    void reject_unknown() const {
        static const std::vector<std::string> known_sections = {"sim",    "controller", "mission",
                                                                "reward", "train",      "paths"};
        for (const auto& [sec, keys] : table) {
            bool known = false;
            for (const auto& ks : known_sections) known = known || ks == sec;
            if (!known) throw ConfigError("config: unknown section [" + sec + "]");
            auto cs = consumed.find(sec);
            for (const auto& [key, _] : keys) {
                if (cs == consumed.end() || cs->second.count(key) == 0)
                    throw ConfigError("config: unknown key " + sec + "." + key);
            }
        }
    }
};

inline RecoverGrid parse_grid(const std::string& spec) {
    RecoverGrid g;
    const auto c1 = spec.find(':');
    const auto c2 = spec.rfind(':');
    if (c1 == std::string::npos || c2 == c1)
        throw ConfigError("config: recover.grid must be start:step:end");
    try {
        g.start = std::stod(spec.substr(0, c1));
        g.step = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        g.end = std::stod(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("config: recover.grid must be start:step:end");
    }
    if (!(g.step > 0.0 && g.end >= g.start)) throw ConfigError("config: bad recover.grid values");
    return g;
}

}  // namespace detail_config

inline RunConfig RunConfig::from_text(const std::string& text) {
    const toml::Table table = toml::parse(text);
    detail_config::Reader r(table);
    RunConfig c;

    r.get("sim", "dt", c.sim.dt);
    r.get("sim", "tau_att", c.sim.tau_att);
    r.get("sim", "mu_max", c.sim.mu_max);

    r.get("controller", "kp", c.gains.k_p);
    r.get("controller", "kv", c.gains.k_v);

    double tilt_deg = c.gap.tilt * 180.0 / M_PI;
    r.get("mission", "gap.tilt_deg", tilt_deg);
    c.gap.tilt = tilt_deg * M_PI / 180.0;
    r.get("mission", "gap.center", c.gap.center);
    r.get("mission", "gap.width", c.gap.width);
    r.get("mission", "gap.height", c.gap.height);
    r.get("mission", "v_cross", c.mission.v_cross);
    r.get("mission", "tau_tr", c.mission.tau_tr);
    r.get("mission", "t_approach", c.mission.t_approach);
    std::string grid = "0.5:0.3:3.0";
    r.get("mission", "recover.grid", grid);
    c.mission.recover_grid = detail_config::parse_grid(grid);
    r.get("mission", "hover_past_gap", c.mission.hover_past_gap);
    r.get("mission", "hover_altitude", c.mission.hover_altitude);
    r.get("mission", "settle_time", c.mission.settle_time);
    r.get("mission", "start_hover", c.start_hover);
    r.get("mission", "lab_min", c.lab.min);
    r.get("mission", "lab_max", c.lab.max);
    r.get("mission", "drone_radius", c.drone_radius);

    r.get("reward", "w_omega", c.reward.w_omega);
    r.get("reward", "w_alpha", c.reward.w_alpha);
    r.get("reward", "w_j", c.reward.w_j);
    r.get("reward", "collision_penalty", c.reward.collision_penalty);
    r.get("reward", "d_a", c.reward.d_a);
    r.get("reward", "w_r", c.reward.w_r);
    r.get("reward", "one_time_bonus", c.reward.one_time_bonus);
    c.reward.dt = c.sim.dt;

    r.get("train", "epochs", c.train.epochs);
    r.get("train", "lr", c.train.lr);
    r.get("train", "batch", c.train.batch_size);
    r.get("train", "weight_decay", c.train.weight_decay);
    r.get("train", "test_trajectories", c.train.test_trajectories);
    r.get("train", "test_fraction", c.train.test_fraction);
    r.get("train", "aug_scale_min", c.train.aug_scale_min);
    r.get("train", "aug_scale_max", c.train.aug_scale_max);
    r.get("train", "chunk", c.train.chunk);
    r.get("train", "workers", c.train.workers);
    r.get("train", "points_per_traj", c.points_per_traj);
    r.get("train", "planner_dp", c.planner_ranges.dp);
    r.get("train", "planner_v", c.planner_ranges.v);
    r.get("train", "planner_a", c.planner_ranges.a);
    r.get("train", "planner_vbar_min", c.planner_ranges.vbar_min);
    r.get("train", "planner_vbar_max", c.planner_ranges.vbar_max);
    r.get("train", "reject_v", c.planner_ranges.reject_v);
    r.get("train", "reject_a", c.planner_ranges.reject_a);
    r.get("train", "ft_iters", c.finetune.iters);
    r.get("train", "ft_batch_episodes", c.finetune.batch_episodes);
    r.get("train", "ft_scenarios_per_iter", c.finetune.scenarios_per_iter);
    r.get("train", "ft_sigma", c.finetune.sigma);
    r.get("train", "ft_lr", c.finetune.lr);
    bool randomize = c.finetune.randomize_scenarios;
    r.get("train", "ft_randomize", randomize);
    c.finetune.randomize_scenarios = randomize;
    double ft_tilt_min = c.finetune.randomization.tilt_min * 180.0 / M_PI;
    double ft_tilt_max = c.finetune.randomization.tilt_max * 180.0 / M_PI;
    r.get("train", "ft_tilt_min_deg", ft_tilt_min);
    r.get("train", "ft_tilt_max_deg", ft_tilt_max);
    c.finetune.randomization.tilt_min = ft_tilt_min * M_PI / 180.0;
    c.finetune.randomization.tilt_max = ft_tilt_max * M_PI / 180.0;
    r.get("train", "ft_center_jitter", c.finetune.randomization.center_jitter);
    r.get("train", "ft_hover_jitter", c.finetune.randomization.hover_jitter);
    c.finetune.workers = c.train.workers;

    r.get("paths", "out_dir", c.out_dir);

    r.reject_unknown();
    return c;
}

namespace detail_config {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
inline std::string fmt(const Vec3& v) {
    return "[" + fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()) + "]";
}

}  // namespace detail_config

/// Canonical serialization (stable key order); basis of the config hash and
/// of config echo into artifact metadata.
inline std::string RunConfig::serialize() const {
    using detail_config::fmt;
    std::ostringstream o;
    o << "[sim]\n";
    o << "dt = " << fmt(sim.dt) << "\n";
    o << "tau_att = " << fmt(sim.tau_att) << "\n";
    o << "mu_max = " << fmt(sim.mu_max) << "\n";
    o << "[controller]\n";
    o << "kp = " << fmt(gains.k_p) << "\n";
    o << "kv = " << fmt(gains.k_v) << "\n";
    o << "[mission]\n";
    o << "gap.center = " << fmt(gap.center) << "\n";
    o << "gap.tilt_deg = " << fmt(gap.tilt * 180.0 / M_PI) << "\n";
    o << "gap.width = " << fmt(gap.width) << "\n";
    o << "gap.height = " << fmt(gap.height) << "\n";
    o << "v_cross = " << fmt(mission.v_cross) << "\n";
    o << "tau_tr = " << fmt(mission.tau_tr) << "\n";
    o << "t_approach = " << fmt(mission.t_approach) << "\n";
    o << "recover.grid = \"" << fmt(mission.recover_grid.start) << ":"
      << fmt(mission.recover_grid.step) << ":" << fmt(mission.recover_grid.end) << "\"\n";
    o << "hover_past_gap = " << fmt(mission.hover_past_gap) << "\n";
    o << "hover_altitude = " << fmt(mission.hover_altitude) << "\n";
    o << "settle_time = " << fmt(mission.settle_time) << "\n";
    o << "start_hover = " << fmt(start_hover) << "\n";
    o << "lab_min = " << fmt(lab.min) << "\n";
    o << "lab_max = " << fmt(lab.max) << "\n";
    o << "drone_radius = " << fmt(drone_radius) << "\n";
    o << "[reward]\n";
    o << "w_omega = " << fmt(reward.w_omega) << "\n";
    o << "w_alpha = " << fmt(reward.w_alpha) << "\n";
    o << "w_j = " << fmt(reward.w_j) << "\n";
    o << "collision_penalty = " << fmt(reward.collision_penalty) << "\n";
    o << "d_a = " << fmt(reward.d_a) << "\n";
    o << "w_r = " << fmt(reward.w_r) << "\n";
    o << "one_time_bonus = " << fmt(reward.one_time_bonus) << "\n";
    o << "[train]\n";
    o << "epochs = " << train.epochs << "\n";
    o << "lr = " << fmt(train.lr) << "\n";
    o << "batch = " << train.batch_size << "\n";
    o << "weight_decay = " << fmt(train.weight_decay) << "\n";
    o << "test_trajectories = " << train.test_trajectories << "\n";
    o << "test_fraction = " << fmt(train.test_fraction) << "\n";
    o << "aug_scale_min = " << fmt(train.aug_scale_min) << "\n";
    o << "aug_scale_max = " << fmt(train.aug_scale_max) << "\n";
    o << "chunk = " << train.chunk << "\n";
    o << "workers = " << train.workers << "\n";
    o << "points_per_traj = " << points_per_traj << "\n";
    o << "planner_dp = " << fmt(planner_ranges.dp) << "\n";
    o << "planner_v = " << fmt(planner_ranges.v) << "\n";
    o << "planner_a = " << fmt(planner_ranges.a) << "\n";
    o << "planner_vbar_min = " << fmt(planner_ranges.vbar_min) << "\n";
    o << "planner_vbar_max = " << fmt(planner_ranges.vbar_max) << "\n";
    o << "reject_v = " << fmt(planner_ranges.reject_v) << "\n";
    o << "reject_a = " << fmt(planner_ranges.reject_a) << "\n";
    o << "ft_iters = " << finetune.iters << "\n";
    o << "ft_batch_episodes = " << finetune.batch_episodes << "\n";
    o << "ft_scenarios_per_iter = " << finetune.scenarios_per_iter << "\n";
    o << "ft_sigma = " << fmt(finetune.sigma) << "\n";
    o << "ft_lr = " << fmt(finetune.lr) << "\n";
    o << "ft_randomize = " << (finetune.randomize_scenarios ? "true" : "false") << "\n";
    o << "ft_tilt_min_deg = " << fmt(finetune.randomization.tilt_min * 180.0 / M_PI) << "\n";
    o << "ft_tilt_max_deg = " << fmt(finetune.randomization.tilt_max * 180.0 / M_PI) << "\n";
    o << "ft_center_jitter = " << fmt(finetune.randomization.center_jitter) << "\n";
    o << "ft_hover_jitter = " << fmt(finetune.randomization.hover_jitter) << "\n";
    o << "[paths]\n";
    o << "out_dir = \"" << out_dir << "\"\n";
    return o.str();
}

}  // namespace gapflight
