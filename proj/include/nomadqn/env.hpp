#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nomadqn/channel.hpp"
#include "nomadqn/rng.hpp"

namespace nomadqn::env {

enum class DeviceType { Robot, Sensor, Controller };

inline const char* device_type_name(DeviceType t) {
    switch (t) {
        case DeviceType::Robot: return "robot";
        case DeviceType::Sensor: return "sensor";
        case DeviceType::Controller: return "controller";
    }
    return "?";
}

// Data block sizes: 1500 / 1024 / 512 bytes.
inline double data_block_bits(DeviceType t) {
    switch (t) {
        case DeviceType::Robot: return 12000.0;
        case DeviceType::Sensor: return 8192.0;
        case DeviceType::Controller: return 4096.0;
    }
    return 0.0;
}

inline double deadline_budget_seconds(DeviceType t) {
    switch (t) {
        case DeviceType::Robot: return 0.100;
        case DeviceType::Sensor: return 0.010;
        case DeviceType::Controller: return 0.100;
    }
    return 0.0;
}

struct Device {
    int id = 0;
    DeviceType dtype = DeviceType::Robot;
    double x = 0.0;
    double y = 0.0;
};

struct FactoryConfig {
    int n_subchannels = 10;
    int n_robots = 5;
    int n_sensors = 10;
    int n_controllers = 10;
    double total_bandwidth_hz = 2e8;
    double factory_side_meters = 100.0;
    std::vector<double> power_levels = {0.25, 0.5, 0.75, 1.0};
    double p_max = 1.0;
    double lambda = 0.5; // reward trade-off weight, latency in milliseconds
    channel::PropagationConfig propagation;

    int n_devices() const { return n_robots + n_sensors + n_controllers; }
    double subchannel_bandwidth_hz() const {
        return total_bandwidth_hz / n_subchannels;
    }

    void validate() const {
        if (n_subchannels < 1)
            throw std::invalid_argument("n_subchannels must be >= 1");
        if (n_robots < 0 || n_sensors < 0 || n_controllers < 0 || n_devices() < 1)
            throw std::invalid_argument("device counts must be non-negative, total >= 1");
        if (total_bandwidth_hz <= 0.0)
            throw std::invalid_argument("total_bandwidth_hz must be > 0");
        if (factory_side_meters <= 0.0)
            throw std::invalid_argument("factory_side_meters must be > 0");
        if (power_levels.empty())
            throw std::invalid_argument("power_levels must be non-empty");
        for (double p : power_levels)
            if (p <= 0.0 || p > p_max)
                throw std::invalid_argument("every power level must lie in (0, p_max]");
        if (lambda < 0.0)
            throw std::invalid_argument("lambda must be >= 0");
        propagation.validate();
    }
};

// Sub-channel assignment and discrete power level of every device.
struct AllocationState {
    std::vector<int> assigned_subchannel;
    std::vector<int> power_level_index;
    int current_device = 0;
    std::vector<channel::ChannelRealization> channels;
};

struct StepOutcome {
    double reward = 0.0;
    std::vector<double> next_state_vector;
    std::vector<double> per_device_throughput_mbps;
    std::vector<double> per_device_latency_ms;
    std::vector<bool> deadline_violations;
    bool done = false;
};

inline int action_space_size(const FactoryConfig& cfg) {
    return cfg.n_subchannels * static_cast<int>(cfg.power_levels.size());
}

// Action index a decodes as (subchannel = a div n_levels, level = a mod n_levels).
inline std::pair<int, int> decode_action(int action, const FactoryConfig& cfg) {
    const int n_levels = static_cast<int>(cfg.power_levels.size());
    return {action / n_levels, action % n_levels};
}

inline int encode_action(int subchannel, int level, const FactoryConfig& cfg) {
    return subchannel * static_cast<int>(cfg.power_levels.size()) + level;
}

// [gains / max gain, powers / p_max, one-hot of current_device], length 3 N_u.
inline std::vector<double> encode_state(const AllocationState& alloc,
                                        const FactoryConfig& cfg) {
    const std::size_t n = alloc.channels.size();
    std::vector<double> s(3 * n, 0.0);
    double max_gain = 0.0;
    for (const auto& c : alloc.channels) max_gain = std::max(max_gain, c.gain_h);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = max_gain > 0.0 ? alloc.channels[i].gain_h / max_gain : 0.0;
        s[n + i] = cfg.power_levels[alloc.power_level_index[i]] / cfg.p_max;
    }
    s[2 * n + alloc.current_device] = 1.0;
    return s;
}

inline constexpr double kLatencyCapMs = 1000.0;

// r = log2(1+SINR) - lambda * L, with L in milliseconds clipped at 1000 ms.
inline double reward_of(double throughput_bps_hz, double latency_ms, double lambda) {
    if (!std::isfinite(latency_ms)) return -lambda * kLatencyCapMs;
    return throughput_bps_hz - lambda * std::min(latency_ms, kLatencyCapMs);
}

// The MDP: factory topology plus AllocationState, one device decided per step.
class Environment {
public:
    Environment(FactoryConfig cfg, int max_timesteps)
        : cfg_(std::move(cfg)), max_timesteps_(max_timesteps) {
        cfg_.validate();
        if (max_timesteps_ < 1)
            throw std::invalid_argument("max_timesteps must be >= 1");
    }

    // Devices placed uniformly in the factory square (BS at center), random
    // sub-channels, lowest power level, fresh fading.
    std::vector<double> reset(Rng& rng) {
        const int n = cfg_.n_devices();
        devices_.clear();
        devices_.reserve(n);
        const double half = cfg_.factory_side_meters / 2.0;
        for (int i = 0; i < n; ++i) {
            DeviceType t = i < cfg_.n_robots ? DeviceType::Robot
                           : i < cfg_.n_robots + cfg_.n_sensors
                               ? DeviceType::Sensor
                               : DeviceType::Controller;
            devices_.push_back({i, t, rng.uniform(-half, half), rng.uniform(-half, half)});
        }
        alloc_.assigned_subchannel.assign(n, 0);
        alloc_.power_level_index.assign(n, 0);
        alloc_.channels.assign(n, {});
        for (int i = 0; i < n; ++i)
            alloc_.assigned_subchannel[i] =
                static_cast<int>(rng.uniform_int(cfg_.n_subchannels));
        alloc_.current_device = 0;
        step_count_ = 0;
        resample_fading(rng);
        return encode_state(alloc_, cfg_);
    }

    StepOutcome step(int action, Rng& rng) {
        if (action < 0 || action >= action_space_size(cfg_))
            throw std::out_of_range("step: invalid action index " + std::to_string(action));
        const int n = cfg_.n_devices();
        const int acted = alloc_.current_device;
        const auto [sub, level] = decode_action(action, cfg_);
        alloc_.assigned_subchannel[acted] = sub;
        alloc_.power_level_index[acted] = level;

        StepOutcome out;
        out.per_device_throughput_mbps.resize(n);
        out.per_device_latency_ms.resize(n);
        out.deadline_violations.resize(n);
        last_sinr_.assign(n, 0.0);

        const double b_sub = cfg_.subchannel_bandwidth_hz();
        std::vector<channel::CochannelEntry> cluster;
        for (int i = 0; i < n; ++i) {
            cluster.clear();
            const int sc = alloc_.assigned_subchannel[i];
            for (int j = 0; j < n; ++j)
                if (alloc_.assigned_subchannel[j] == sc)
                    cluster.push_back({j, alloc_.channels[j].gain_h,
                                       cfg_.power_levels[alloc_.power_level_index[j]]});
            const double s = channel::sinr(i, cluster, cfg_.propagation.noise_power);
            const double t = channel::throughput_bps_hz(s);
            const double lat_s =
                channel::latency_seconds(data_block_bits(devices_[i].dtype), t, b_sub);
            last_sinr_[i] = s;
            out.per_device_throughput_mbps[i] = t * b_sub / 1e6;
            out.per_device_latency_ms[i] = lat_s * 1000.0;
            out.deadline_violations[i] =
                lat_s * 1000.0 > deadline_budget_seconds(devices_[i].dtype) * 1000.0;
        }

        const double acted_throughput =
            out.per_device_throughput_mbps[acted] * 1e6 / b_sub;
        out.reward = reward_of(acted_throughput, out.per_device_latency_ms[acted],
                               cfg_.lambda);

        alloc_.current_device = (acted + 1) % n;
        resample_fading(rng);
        ++step_count_;
        out.done = step_count_ >= max_timesteps_;
        out.next_state_vector = encode_state(alloc_, cfg_);
        return out;
    }

    const FactoryConfig& config() const { return cfg_; }
    const AllocationState& allocation() const { return alloc_; }
    const std::vector<Device>& devices() const { return devices_; }
    const std::vector<double>& last_sinr() const { return last_sinr_; }
    int step_count() const { return step_count_; }
    int max_timesteps() const { return max_timesteps_; }
    int state_dim() const { return 3 * cfg_.n_devices(); }

private:
    void resample_fading(Rng& rng) {
        for (int i = 0; i < cfg_.n_devices(); ++i) {
            auto& c = alloc_.channels[i];
            c.device_id = i;
            c.distance_d = std::max(std::hypot(devices_[i].x, devices_[i].y),
                                    cfg_.propagation.reference_distance_d0);
            c.fading_g = channel::sample_fading(rng);
            c.gain_h = channel::realized_gain(c.fading_g, c.distance_d,
                                              cfg_.propagation, rng);
        }
    }

    FactoryConfig cfg_;
    int max_timesteps_;
    std::vector<Device> devices_;
    AllocationState alloc_;
    std::vector<double> last_sinr_;
    int step_count_ = 0;
};

}  // namespace nomadqn::env
