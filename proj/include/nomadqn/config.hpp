#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nomadqn/agent.hpp"
#include "nomadqn/env.hpp"
#include "nomadqn/experiment.hpp"

namespace nomadqn::config {

inline constexpr const char* kToolVersion = "noma-dqn 1.0.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fully resolved run configuration; echoed verbatim into the output
// directory before any run starts.
struct RunManifest {
    std::string config_path; // empty when built from defaults
    env::FactoryConfig factory;
    dqn::AgentConfig agent;
    experiment::ExperimentPlan plan;
    std::string output_dir;
    std::string tool_version = kToolVersion;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& section,
                                const std::vector<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const auto& a : allowed)
            if (a == key) { known = true; break; }
        if (!known)
            throw ConfigError("unknown key '" + section + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key '" + key + "' has the wrong type");
    }
}

inline void check(bool ok, const std::string& key, const std::string& bound) {
    if (!ok) throw ConfigError("value out of range: '" + key + "' must be " + bound);
}

}  // namespace detail

inline RunManifest manifest_from_json(const nlohmann::json& doc,
                                      const std::string& config_path = "") {
    using detail::check;
    using detail::get_or;
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(doc, "", {"factory", "propagation", "agent", "experiment"});

    RunManifest m;
    m.config_path = config_path;

    const auto factory = doc.value("factory", nlohmann::json::object());
    detail::reject_unknown_keys(
        factory, "factory.",
        {"n_subchannels", "n_robots", "n_sensors", "n_controllers",
         "total_bandwidth_hz", "factory_side_meters", "power_levels", "p_max",
         "lambda"});
    auto& f = m.factory;
    f.n_subchannels = get_or(factory, "n_subchannels", f.n_subchannels);
    f.n_robots = get_or(factory, "n_robots", f.n_robots);
    f.n_sensors = get_or(factory, "n_sensors", f.n_sensors);
    f.n_controllers = get_or(factory, "n_controllers", f.n_controllers);
    f.total_bandwidth_hz = get_or(factory, "total_bandwidth_hz", f.total_bandwidth_hz);
    f.factory_side_meters = get_or(factory, "factory_side_meters", f.factory_side_meters);
    f.power_levels = get_or(factory, "power_levels", f.power_levels);
    f.p_max = get_or(factory, "p_max", f.p_max);
    f.lambda = get_or(factory, "lambda", f.lambda);
    check(f.n_subchannels >= 1, "factory.n_subchannels", ">= 1");
    check(f.n_robots >= 0 && f.n_sensors >= 0 && f.n_controllers >= 0 &&
              f.n_devices() >= 1,
          "factory.n_robots/n_sensors/n_controllers", "non-negative with total >= 1");
    check(f.total_bandwidth_hz > 0.0, "factory.total_bandwidth_hz", "> 0");
    check(f.factory_side_meters > 0.0, "factory.factory_side_meters", "> 0");
    check(!f.power_levels.empty(), "factory.power_levels", "non-empty");
    check(f.p_max > 0.0, "factory.p_max", "> 0");
    for (double p : f.power_levels)
        check(p > 0.0 && p <= f.p_max, "factory.power_levels", "in (0, p_max]");
    check(f.lambda >= 0.0, "factory.lambda", ">= 0");

    const auto prop = doc.value("propagation", nlohmann::json::object());
    detail::reject_unknown_keys(prop, "propagation.",
                                {"path_loss_exponent_n", "reference_distance_d0",
                                 "reference_path_loss_db", "shadow_sigma_db",
                                 "noise_power", "gain_model"});
    auto& p = m.factory.propagation;
    p.path_loss_exponent_n = get_or(prop, "path_loss_exponent_n", p.path_loss_exponent_n);
    p.reference_distance_d0 = get_or(prop, "reference_distance_d0", p.reference_distance_d0);
    p.reference_path_loss_db = get_or(prop, "reference_path_loss_db", p.reference_path_loss_db);
    p.shadow_sigma_db = get_or(prop, "shadow_sigma_db", p.shadow_sigma_db);
    p.noise_power = get_or(prop, "noise_power", p.noise_power);
    const std::string gm = get_or<std::string>(prop, "gain_model", "distance_power");
    if (gm == "distance_power") {
        p.gain_model = channel::GainModel::DistancePower;
    } else if (gm == "log_distance_db") {
        p.gain_model = channel::GainModel::LogDistanceDb;
    } else {
        throw ConfigError("value out of range: 'propagation.gain_model' must be "
                          "'distance_power' or 'log_distance_db'");
    }
    check(p.path_loss_exponent_n >= 1.0, "propagation.path_loss_exponent_n", ">= 1");
    check(p.reference_distance_d0 > 0.0, "propagation.reference_distance_d0", "> 0");
    check(p.shadow_sigma_db >= 0.0, "propagation.shadow_sigma_db", ">= 0");
    check(p.noise_power > 0.0, "propagation.noise_power", "> 0");

    const auto agent = doc.value("agent", nlohmann::json::object());
    detail::reject_unknown_keys(
        agent, "agent.",
        {"gamma", "batch_size", "learning_rate", "epsilon_start", "epsilon_min",
         "epsilon_decay", "target_sync_interval", "replay_capacity",
         "hidden_sizes", "optimizer"});
    auto& a = m.agent;
    a.gamma = get_or(agent, "gamma", a.gamma);
    a.batch_size = get_or(agent, "batch_size", a.batch_size);
    a.optimizer.learning_rate = get_or(agent, "learning_rate", a.optimizer.learning_rate);
    a.epsilon_start = get_or(agent, "epsilon_start", a.epsilon_start);
    a.epsilon_min = get_or(agent, "epsilon_min", a.epsilon_min);
    a.epsilon_decay = get_or(agent, "epsilon_decay", a.epsilon_decay);
    a.target_sync_interval = get_or(agent, "target_sync_interval", a.target_sync_interval);
    a.replay_capacity = get_or<std::size_t>(agent, "replay_capacity", a.replay_capacity);
    a.hidden_sizes = get_or(agent, "hidden_sizes", a.hidden_sizes);
    const std::string opt = get_or<std::string>(agent, "optimizer", "adam");
    if (opt == "adam") {
        a.optimizer.kind = dqn::OptimizerKind::Adam;
    } else if (opt == "sgd") {
        a.optimizer.kind = dqn::OptimizerKind::Sgd;
    } else {
        throw ConfigError("value out of range: 'agent.optimizer' must be 'adam' or 'sgd'");
    }
    check(a.gamma >= 0.0 && a.gamma < 1.0, "agent.gamma", "in [0, 1)");
    check(a.batch_size >= 1, "agent.batch_size", ">= 1");
    check(a.optimizer.learning_rate > 0.0, "agent.learning_rate", "> 0");
    check(a.epsilon_min > 0.0 && a.epsilon_min <= a.epsilon_start &&
              a.epsilon_start <= 1.0,
          "agent.epsilon_min/epsilon_start", "0 < epsilon_min <= epsilon_start <= 1");
    check(a.epsilon_decay > 0.0 && a.epsilon_decay <= 1.0, "agent.epsilon_decay",
          "in (0, 1]");
    check(a.target_sync_interval >= 1, "agent.target_sync_interval", ">= 1");
    check(a.replay_capacity >= static_cast<std::size_t>(a.batch_size),
          "agent.replay_capacity", ">= batch_size");
    check(!a.hidden_sizes.empty(), "agent.hidden_sizes", "non-empty");
    for (int h : a.hidden_sizes) check(h >= 1, "agent.hidden_sizes", ">= 1 each");

    const auto exp = doc.value("experiment", nlohmann::json::object());
    detail::reject_unknown_keys(exp, "experiment.",
                                {"episodes", "max_timesteps", "seeds", "lr_values",
                                 "lambda_values", "eval_episodes"});
    auto& e = m.plan;
    e.episodes = get_or(exp, "episodes", e.episodes);
    e.max_timesteps = get_or(exp, "max_timesteps", e.max_timesteps);
    e.seeds = get_or(exp, "seeds", e.seeds);
    e.lr_values = get_or(exp, "lr_values", e.lr_values);
    e.lambda_values = get_or(exp, "lambda_values", e.lambda_values);
    e.eval_episodes = get_or(exp, "eval_episodes", e.eval_episodes);
    check(e.episodes >= 1, "experiment.episodes", ">= 1");
    check(e.max_timesteps >= 1, "experiment.max_timesteps", ">= 1");
    check(e.eval_episodes >= 1, "experiment.eval_episodes", ">= 1");
    check(!e.seeds.empty(), "experiment.seeds", "non-empty");
    check(!e.lr_values.empty(), "experiment.lr_values", "non-empty");
    check(!e.lambda_values.empty(), "experiment.lambda_values", "non-empty");
    for (double lr : e.lr_values) check(lr > 0.0, "experiment.lr_values", "> 0 each");
    for (double lv : e.lambda_values)
        check(lv >= 0.0, "experiment.lambda_values", ">= 0 each");

    return m;
}

inline RunManifest parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return manifest_from_json(doc, path);
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json doc;
    const auto& f = m.factory;
    doc["factory"] = {{"n_subchannels", f.n_subchannels},
                      {"n_robots", f.n_robots},
                      {"n_sensors", f.n_sensors},
                      {"n_controllers", f.n_controllers},
                      {"total_bandwidth_hz", f.total_bandwidth_hz},
                      {"factory_side_meters", f.factory_side_meters},
                      {"power_levels", f.power_levels},
                      {"p_max", f.p_max},
                      {"lambda", f.lambda}};
    const auto& p = f.propagation;
    doc["propagation"] = {
        {"path_loss_exponent_n", p.path_loss_exponent_n},
        {"reference_distance_d0", p.reference_distance_d0},
        {"reference_path_loss_db", p.reference_path_loss_db},
        {"shadow_sigma_db", p.shadow_sigma_db},
        {"noise_power", p.noise_power},
        {"gain_model", p.gain_model == channel::GainModel::DistancePower
                           ? "distance_power"
                           : "log_distance_db"}};
    const auto& a = m.agent;
    doc["agent"] = {{"gamma", a.gamma},
                    {"batch_size", a.batch_size},
                    {"learning_rate", a.optimizer.learning_rate},
                    {"epsilon_start", a.epsilon_start},
                    {"epsilon_min", a.epsilon_min},
                    {"epsilon_decay", a.epsilon_decay},
                    {"target_sync_interval", a.target_sync_interval},
                    {"replay_capacity", a.replay_capacity},
                    {"hidden_sizes", a.hidden_sizes},
                    {"optimizer",
                     a.optimizer.kind == dqn::OptimizerKind::Adam ? "adam" : "sgd"}};
    const auto& e = m.plan;
    doc["experiment"] = {{"episodes", e.episodes},
                         {"max_timesteps", e.max_timesteps},
                         {"seeds", e.seeds},
                         {"lr_values", e.lr_values},
                         {"lambda_values", e.lambda_values},
                         {"eval_episodes", e.eval_episodes}};
    return doc;
}

// FNV-1a 64 over the canonical JSON dump.
inline std::string config_hash(const RunManifest& m) {
    const std::string s = manifest_to_json(m).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nomadqn::config
