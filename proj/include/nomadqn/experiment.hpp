#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nomadqn/agent.hpp"
#include "nomadqn/checkpoint.hpp"
#include "nomadqn/csv.hpp"
#include "nomadqn/env.hpp"
#include "nomadqn/log.hpp"
#include "nomadqn/rng.hpp"

namespace nomadqn::experiment {

struct ExperimentPlan {
    int episodes = 1000;
    int max_timesteps = 200;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<double> lr_values = {1e-2, 5e-3, 1e-3};
    std::vector<double> lambda_values = {0.0, 0.25, 0.5, 0.75, 1.0};
    int eval_episodes = 20;

    void validate() const {
        if (episodes < 1 || max_timesteps < 1 || eval_episodes < 1)
            throw std::invalid_argument("episodes, max_timesteps, eval_episodes must be >= 1");
        if (seeds.empty() || lr_values.empty() || lambda_values.empty())
            throw std::invalid_argument("seed, lr and lambda lists must be non-empty");
    }
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linearly interpolated quantile of a sorted copy.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

inline double interquartile_range(const std::vector<double>& v) {
    return quantile(v, 0.75) - quantile(v, 0.25);
}

constexpr int kNumDeviceTypes = 3;

inline const std::array<env::DeviceType, kNumDeviceTypes> kDeviceTypes = {
    env::DeviceType::Robot, env::DeviceType::Sensor, env::DeviceType::Controller};

struct TraceRow {
    int episode = 0;
    int step = 0; // global step index
    int device_id = 0;
    env::DeviceType dtype = env::DeviceType::Robot;
    int subchannel = 0;
    double power_w = 0.0;
    double sinr_db = 0.0;
    double throughput_mbps = 0.0;
    double latency_ms = 0.0;
    double reward = 0.0;
    double cumulative_reward = 0.0;
    bool violation = false;
};

struct RunRecord {
    std::string tag;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    double lambda = 0.0;

    std::vector<double> step_rewards;
    std::vector<double> cumulative_rewards;
    std::vector<double> episode_mean_reward;
    std::vector<TraceRow> trace;

    // Greedy-evaluation aggregates, indexed robot/sensor/controller. Means
    // summarize totals; medians summarize the typical device-step, which for
    // heavy-tailed latency is the more robust central tendency.
    std::array<double, kNumDeviceTypes> mean_throughput_mbps{};
    std::array<double, kNumDeviceTypes> mean_latency_ms{};
    std::array<double, kNumDeviceTypes> median_throughput_mbps{};
    std::array<double, kNumDeviceTypes> median_latency_ms{};
    std::array<double, kNumDeviceTypes> violation_rate{};
    double greedy_mean_spectral_eff = 0.0;
    double greedy_mean_reward = 0.0;

    long total_env_steps = 0;
    long gradient_steps = 0;
    double wall_clock_seconds = 0.0;
};

namespace detail {

inline int type_index(env::DeviceType t) { return static_cast<int>(t); }

// Latencies feed aggregates clipped at the reward cap so series stay finite.
inline double clipped_latency_ms(double latency_ms) {
    return std::isfinite(latency_ms) ? std::min(latency_ms, env::kLatencyCapMs)
                                     : env::kLatencyCapMs;
}

// Shared accumulator for the greedy-evaluation phase.
struct EvalAccumulator {
    std::array<std::vector<double>, kNumDeviceTypes> tp_samples, lat_samples;
    std::array<double, kNumDeviceTypes> viol_sum{};
    double se_sum = 0.0, reward_sum = 0.0;
    long steps = 0;

    void add_step(const env::Environment& e, const env::StepOutcome& out,
                  double b_sub) {
        const int n = static_cast<int>(out.per_device_throughput_mbps.size());
        for (int i = 0; i < n; ++i) {
            const int ti = type_index(e.devices()[i].dtype);
            tp_samples[ti].push_back(out.per_device_throughput_mbps[i]);
            lat_samples[ti].push_back(clipped_latency_ms(out.per_device_latency_ms[i]));
            viol_sum[ti] += out.deadline_violations[i] ? 1.0 : 0.0;
            se_sum += out.per_device_throughput_mbps[i] * 1e6 / b_sub;
        }
        reward_sum += out.reward;
        ++steps;
    }

    void finish(RunRecord& rec) const {
        long se_count = 0;
        for (int ti = 0; ti < kNumDeviceTypes; ++ti) {
            const auto& tp = tp_samples[ti];
            const auto& lat = lat_samples[ti];
            if (tp.empty()) continue;
            const double n = static_cast<double>(tp.size());
            rec.mean_throughput_mbps[ti] =
                std::accumulate(tp.begin(), tp.end(), 0.0) / n;
            rec.mean_latency_ms[ti] =
                std::accumulate(lat.begin(), lat.end(), 0.0) / n;
            rec.median_throughput_mbps[ti] = median(tp);
            rec.median_latency_ms[ti] = median(lat);
            rec.violation_rate[ti] = viol_sum[ti] / n;
            se_count += tp.size();
        }
        rec.greedy_mean_spectral_eff = se_count > 0 ? se_sum / se_count : 0.0;
        rec.greedy_mean_reward = steps > 0 ? reward_sum / steps : 0.0;
    }
};

}  // namespace detail

// One full training run per Algorithm 1, followed by a greedy evaluation
// phase with frozen weights that produces the reported metrics.
inline RunRecord train(const env::FactoryConfig& cfg,
                       const dqn::AgentConfig& agent_cfg, const ExperimentPlan& plan,
                       std::uint64_t seed, const std::string& tag,
                       dqn::Checkpoint* checkpoint_out = nullptr) {
    cfg.validate();
    agent_cfg.validate();
    plan.validate();
    const auto t_start = std::chrono::steady_clock::now();

    Rng root(seed);
    Rng init_rng = root.spawn(0);
    Rng env_rng = root.spawn(1);
    Rng agent_rng = root.spawn(2);
    Rng eval_rng = root.spawn(3);

    env::Environment environment(cfg, plan.max_timesteps);
    dqn::DqnAgent agent(environment.state_dim(), env::action_space_size(cfg),
                        agent_cfg, init_rng);

    RunRecord rec;
    rec.tag = tag;
    rec.seed = seed;
    rec.learning_rate = agent_cfg.optimizer.learning_rate;
    rec.lambda = cfg.lambda;
    rec.step_rewards.reserve(static_cast<std::size_t>(plan.episodes) * plan.max_timesteps);
    rec.trace.reserve(rec.step_rewards.capacity());

    double cumulative = 0.0;
    int global_step = 0;
    for (int ep = 0; ep < plan.episodes; ++ep) {
        auto state = environment.reset(env_rng);
        double ep_reward = 0.0;
        for (int t = 0; t < plan.max_timesteps; ++t) {
            const int acted = environment.allocation().current_device;
            const int action = agent.act(state, agent_rng);
            auto out = environment.step(action, env_rng);
            // The episode ends by time limit, not by reaching a terminal state,
            // so the stored transition keeps bootstrapping; a terminal flag here
            // would teach the network a ~100x smaller value for states it
            // cannot distinguish from mid-episode ones.
            agent.observe({state, action, out.reward, out.next_state_vector, false});
            try {
                agent.learn(agent_rng);
            } catch (const std::exception& e) {
                throw std::runtime_error("run '" + tag + "' episode " +
                                         std::to_string(ep) + " step " +
                                         std::to_string(t) + ": " + e.what());
            }

            cumulative += out.reward;
            ep_reward += out.reward;
            rec.step_rewards.push_back(out.reward);
            rec.cumulative_rewards.push_back(cumulative);

            TraceRow row;
            row.episode = ep;
            row.step = global_step;
            row.device_id = acted;
            row.dtype = environment.devices()[acted].dtype;
            row.subchannel = environment.allocation().assigned_subchannel[acted];
            row.power_w = cfg.power_levels[environment.allocation().power_level_index[acted]];
            row.sinr_db = 10.0 * std::log10(std::max(environment.last_sinr()[acted], 1e-300));
            row.throughput_mbps = out.per_device_throughput_mbps[acted];
            row.latency_ms = detail::clipped_latency_ms(out.per_device_latency_ms[acted]);
            row.reward = out.reward;
            row.cumulative_reward = cumulative;
            row.violation = out.deadline_violations[acted];
            rec.trace.push_back(row);

            state = std::move(out.next_state_vector);
            ++global_step;
        }
        rec.episode_mean_reward.push_back(ep_reward / plan.max_timesteps);
        agent.end_episode();
        if ((ep + 1) % 100 == 0)
            log_debug(tag + ": episode " + std::to_string(ep + 1) + "/" +
                      std::to_string(plan.episodes));
    }
    rec.total_env_steps = global_step;
    rec.gradient_steps = agent.gradient_steps();

    // Inference phase: epsilon = 0, no further updates.
    detail::EvalAccumulator acc;
    const double b_sub = cfg.subchannel_bandwidth_hz();
    for (int ep = 0; ep < plan.eval_episodes; ++ep) {
        auto state = environment.reset(eval_rng);
        for (int t = 0; t < plan.max_timesteps; ++t) {
            const int action = agent.act_greedy(state);
            auto out = environment.step(action, eval_rng);
            acc.add_step(environment, out, b_sub);
            state = std::move(out.next_state_vector);
        }
    }
    acc.finish(rec);

    if (checkpoint_out) {
        checkpoint_out->eval_params = agent.eval_params();
        checkpoint_out->target_params = agent.target_params();
        checkpoint_out->opt_state = agent.optimizer_state();
        checkpoint_out->gradient_steps = agent.gradient_steps();
    }

    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    log_info(tag + ": done in " + csv::fixed(rec.wall_clock_seconds, 1) +
             " s, greedy mean reward " + csv::fixed(rec.greedy_mean_reward, 4));
    return rec;
}

// Greedy rollout of an existing network, no training.
inline RunRecord evaluate_policy(const env::FactoryConfig& cfg,
                                 const dqn::NetworkParameters& params,
                                 const ExperimentPlan& plan, std::uint64_t seed,
                                 const std::string& tag) {
    cfg.validate();
    Rng eval_rng = Rng(seed).spawn(3);
    env::Environment environment(cfg, plan.max_timesteps);
    if (params.input_dim() != environment.state_dim())
        throw std::invalid_argument("evaluate_policy: checkpoint input dim " +
                                    std::to_string(params.input_dim()) +
                                    " does not match environment state dim " +
                                    std::to_string(environment.state_dim()));

    RunRecord rec;
    rec.tag = tag;
    rec.seed = seed;
    rec.lambda = cfg.lambda;
    detail::EvalAccumulator acc;
    const double b_sub = cfg.subchannel_bandwidth_hz();
    Rng dummy(0);
    for (int ep = 0; ep < plan.eval_episodes; ++ep) {
        auto state = environment.reset(eval_rng);
        for (int t = 0; t < plan.max_timesteps; ++t) {
            const int action = dqn::select_action(params, state, 0.0, dummy,
                                                  env::action_space_size(cfg));
            auto out = environment.step(action, eval_rng);
            acc.add_step(environment, out, b_sub);
            state = std::move(out.next_state_vector);
        }
    }
    acc.finish(rec);
    rec.total_env_steps = static_cast<long>(plan.eval_episodes) * plan.max_timesteps;
    return rec;
}

namespace detail {

// Runs tasks [0, n) on up to `jobs` threads; output slots are preassigned so
// results are ordered the same regardless of thread count.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::string trim_number(double v) {
    std::string s = csv::fixed(v, 6);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace detail

// One run per (learning rate, seed).
inline std::vector<RunRecord> sweep_learning_rates(
    const env::FactoryConfig& cfg, dqn::AgentConfig agent_cfg,
    const ExperimentPlan& plan, int jobs = 1,
    std::vector<dqn::Checkpoint>* checkpoints = nullptr) {
    plan.validate();
    const int n_lr = static_cast<int>(plan.lr_values.size());
    const int n_seeds = static_cast<int>(plan.seeds.size());
    std::vector<RunRecord> records(static_cast<std::size_t>(n_lr) * n_seeds);
    if (checkpoints) checkpoints->resize(records.size());
    detail::parallel_for(n_lr * n_seeds, jobs, [&](int idx) {
        const double lr = plan.lr_values[idx / n_seeds];
        const std::uint64_t seed = plan.seeds[idx % n_seeds];
        dqn::AgentConfig ac = agent_cfg;
        ac.optimizer.learning_rate = lr;
        const std::string tag =
            "lr" + detail::trim_number(lr) + "_s" + std::to_string(seed);
        records[idx] = train(cfg, ac, plan, seed, tag,
                             checkpoints ? &(*checkpoints)[idx] : nullptr);
    });
    return records;
}

// One run per (lambda, seed) at the configured learning rate.
inline std::vector<RunRecord> sweep_lambda(
    const env::FactoryConfig& cfg, const dqn::AgentConfig& agent_cfg,
    const ExperimentPlan& plan, int jobs = 1,
    std::vector<dqn::Checkpoint>* checkpoints = nullptr) {
    plan.validate();
    const int n_lambda = static_cast<int>(plan.lambda_values.size());
    const int n_seeds = static_cast<int>(plan.seeds.size());
    std::vector<RunRecord> records(static_cast<std::size_t>(n_lambda) * n_seeds);
    if (checkpoints) checkpoints->resize(records.size());
    detail::parallel_for(n_lambda * n_seeds, jobs, [&](int idx) {
        const double lambda = plan.lambda_values[idx / n_seeds];
        const std::uint64_t seed = plan.seeds[idx % n_seeds];
        env::FactoryConfig fc = cfg;
        fc.lambda = lambda;
        const std::string tag =
            "lambda" + detail::trim_number(lambda) + "_s" + std::to_string(seed);
        records[idx] = train(fc, agent_cfg, plan, seed, tag,
                             checkpoints ? &(*checkpoints)[idx] : nullptr);
    });
    return records;
}

struct SummaryRow {
    std::string config;           // e.g. "lambda0.5" or "lr0.001"
    std::string device_type;      // robot / sensor / controller
    double throughput_mbps_median = 0.0;
    double throughput_mbps_iqr = 0.0;
    double latency_ms_median = 0.0;
    double latency_ms_iqr = 0.0;
    double violation_rate_median = 0.0;
    double greedy_reward_median = 0.0;
    int n_seeds = 0;
};

// Medians and interquartile ranges across seeds, grouped by configuration
// tag prefix (the part before "_s"); row order follows first appearance.
inline std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::vector<std::string> configs;
    for (const auto& r : records) {
        const auto pos = r.tag.rfind("_s");
        const std::string cfg = pos == std::string::npos ? r.tag : r.tag.substr(0, pos);
        if (std::find(configs.begin(), configs.end(), cfg) == configs.end())
            configs.push_back(cfg);
    }
    std::vector<SummaryRow> rows;
    for (const auto& cfg : configs) {
        for (int ti = 0; ti < kNumDeviceTypes; ++ti) {
            std::vector<double> tp, lat, viol, rew;
            for (const auto& r : records) {
                const auto pos = r.tag.rfind("_s");
                const std::string rcfg =
                    pos == std::string::npos ? r.tag : r.tag.substr(0, pos);
                if (rcfg != cfg) continue;
                tp.push_back(r.mean_throughput_mbps[ti]);
                lat.push_back(r.mean_latency_ms[ti]);
                viol.push_back(r.violation_rate[ti]);
                rew.push_back(r.greedy_mean_reward);
            }
            SummaryRow row;
            row.config = cfg;
            row.device_type = env::device_type_name(kDeviceTypes[ti]);
            row.throughput_mbps_median = median(tp);
            row.throughput_mbps_iqr = interquartile_range(tp);
            row.latency_ms_median = median(lat);
            row.latency_ms_iqr = interquartile_range(lat);
            row.violation_rate_median = median(viol);
            row.greedy_reward_median = median(rew);
            row.n_seeds = static_cast<int>(tp.size());
            rows.push_back(row);
        }
    }
    return rows;
}

// run_<tag>.csv step series. Column order is part of the file contract.
inline void write_run_csv(const RunRecord& rec, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "episode,step,device_id,dtype,subchannel,power,sinr_db,"
          "throughput_mbps,latency_ms,reward,cumulative_reward,violation\n";
    for (const auto& r : rec.trace) {
        os << r.episode << ',' << r.step << ',' << r.device_id << ','
           << env::device_type_name(r.dtype) << ',' << r.subchannel << ','
           << csv::fixed(r.power_w, 4) << ',' << csv::fixed(r.sinr_db, 6) << ','
           << csv::fixed(r.throughput_mbps, 6) << ',' << csv::fixed(r.latency_ms, 6)
           << ',' << csv::fixed(r.reward, 6) << ','
           << csv::fixed(r.cumulative_reward, 6) << ',' << (r.violation ? 1 : 0)
           << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "config,device_type,throughput_mbps_median,throughput_mbps_iqr,"
          "latency_ms_median,latency_ms_iqr,violation_rate_median,"
          "greedy_reward_median,n_seeds\n";
    for (const auto& r : rows) {
        os << r.config << ',' << r.device_type << ','
           << csv::fixed(r.throughput_mbps_median, 6) << ','
           << csv::fixed(r.throughput_mbps_iqr, 6) << ','
           << csv::fixed(r.latency_ms_median, 6) << ','
           << csv::fixed(r.latency_ms_iqr, 6) << ','
           << csv::fixed(r.violation_rate_median, 6) << ','
           << csv::fixed(r.greedy_reward_median, 6) << ',' << r.n_seeds << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace nomadqn::experiment
