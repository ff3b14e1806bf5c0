#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nomadqn/rng.hpp"

namespace nomadqn::channel {

// Which propagation model produces the linear gain h used in the SINR.
enum class GainModel {
    DistancePower,  // h = g / d^n
    LogDistanceDb,  // h = g * 10^(-PL(d)/10)
};

struct PropagationConfig {
    double path_loss_exponent_n = 2.0;
    double reference_distance_d0 = 1.0;   // meters
    double reference_path_loss_db = 30.0; // PL(d0)
    double shadow_sigma_db = 0.0;         // 0 disables shadowing
    double noise_power = 1e-6;            // linear watts
    GainModel gain_model = GainModel::DistancePower;

    void validate() const {
        if (path_loss_exponent_n < 1.0)
            throw std::invalid_argument("path_loss_exponent_n must be >= 1");
        if (reference_distance_d0 <= 0.0)
            throw std::invalid_argument("reference_distance_d0 must be > 0");
        if (noise_power <= 0.0)
            throw std::invalid_argument("noise_power must be > 0");
        if (shadow_sigma_db < 0.0)
            throw std::invalid_argument("shadow_sigma_db must be >= 0");
    }
};

// Per-device gain components for one timestep.
struct ChannelRealization {
    int device_id = 0;
    double distance_d = 1.0; // meters
    double fading_g = 1.0;   // small-scale power coefficient, linear
    double gain_h = 1.0;     // resulting linear gain
};

// h = g / d^n
inline double channel_gain(double fading_g, double distance_d, double n) {
    if (distance_d <= 0.0)
        throw std::domain_error("channel_gain: distance must be > 0");
    if (fading_g < 0.0)
        throw std::domain_error("channel_gain: fading must be >= 0");
    return fading_g / std::pow(distance_d, n);
}

// PL(d) = PL(d0) + 10 n log10(d/d0) + X_sigma, all in dB.
inline double path_loss_db(double distance_d, const PropagationConfig& cfg,
                           double shadow_draw_db = 0.0) {
    if (distance_d < cfg.reference_distance_d0)
        throw std::domain_error("path_loss_db: distance below reference distance");
    return cfg.reference_path_loss_db +
           10.0 * cfg.path_loss_exponent_n *
               std::log10(distance_d / cfg.reference_distance_d0) +
           shadow_draw_db;
}

// Unit-mean exponential draw (Rayleigh envelope in the power domain).
inline double sample_fading(Rng& rng) { return rng.exponential(1.0); }

// Linear gain under the configured model, shadow draw sampled when enabled.
inline double realized_gain(double fading_g, double distance_d,
                            const PropagationConfig& cfg, Rng& rng) {
    if (cfg.gain_model == GainModel::DistancePower)
        return channel_gain(fading_g, distance_d, cfg.path_loss_exponent_n);
    const double shadow =
        cfg.shadow_sigma_db > 0.0 ? rng.gaussian(0.0, cfg.shadow_sigma_db) : 0.0;
    const double d = std::max(distance_d, cfg.reference_distance_d0);
    return fading_g * std::pow(10.0, -path_loss_db(d, cfg, shadow) / 10.0);
}

struct CochannelEntry {
    int device_id = 0;
    double gain_h = 0.0;
    double power_w = 0.0;
};

// SINR_i = h_i p_i / (sum_{j != i} h_j p_j + noise) over one sub-channel's cluster.
inline double sinr(int device_i, std::span<const CochannelEntry> cochannel,
                   double noise_power) {
    if (noise_power <= 0.0)
        throw std::domain_error("sinr: noise power must be > 0");
    double signal = std::numeric_limits<double>::quiet_NaN();
    double interference = 0.0;
    bool found = false;
    for (const auto& e : cochannel) {
        if (e.device_id == device_i) {
            signal = e.gain_h * e.power_w;
            found = true;
        } else {
            interference += e.gain_h * e.power_w;
        }
    }
    if (!found)
        throw std::domain_error("sinr: device not present in cochannel cluster");
    return signal / (interference + noise_power);
}

inline double throughput_bps_hz(double sinr_linear) {
    return std::log2(1.0 + sinr_linear);
}

// Sentinel returned when the rate is zero.
inline constexpr double kInfiniteLatency = std::numeric_limits<double>::infinity();

// Transmission delay of a data block at the given spectral efficiency.
inline double latency_seconds(double data_bits, double spectral_eff_bps_hz,
                              double subchannel_bandwidth_hz) {
    if (subchannel_bandwidth_hz <= 0.0)
        throw std::domain_error("latency_seconds: bandwidth must be > 0");
    if (data_bits <= 0.0)
        throw std::domain_error("latency_seconds: data size must be > 0");
    if (spectral_eff_bps_hz <= 0.0) return kInfiniteLatency;
    return data_bits / (spectral_eff_bps_hz * subchannel_bandwidth_hz);
}

}  // namespace nomadqn::channel
