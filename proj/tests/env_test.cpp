#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "nomadqn/env.hpp"
#include "nomadqn/rng.hpp"

using namespace nomadqn;
using namespace nomadqn::env;

namespace {

FactoryConfig tiny_cfg(int robots, int sensors, int controllers, int channels) {
    FactoryConfig cfg;
    cfg.n_robots = robots;
    cfg.n_sensors = sensors;
    cfg.n_controllers = controllers;
    cfg.n_subchannels = channels;
    return cfg;
}

}  // namespace

TEST_CASE("reset places 25 devices with exactly one sub-channel each") {
    FactoryConfig cfg;
    Environment e(cfg, 200);
    Rng rng(1);
    auto state = e.reset(rng);
    CHECK(e.devices().size() == 25);
    CHECK(state.size() == 75);
    const auto& alloc = e.allocation();
    REQUIRE(alloc.assigned_subchannel.size() == 25);
    int cluster_total = 0;
    for (int s = 0; s < cfg.n_subchannels; ++s)
        for (int i = 0; i < 25; ++i)
            if (alloc.assigned_subchannel[i] == s) ++cluster_total;
    CHECK(cluster_total == 25); // clusters partition the device set
    for (int i = 0; i < 25; ++i) {
        CHECK(alloc.assigned_subchannel[i] >= 0);
        CHECK(alloc.assigned_subchannel[i] < cfg.n_subchannels);
        CHECK(alloc.power_level_index[i] == 0);
    }
    // Device type blocks: 5 robots, 10 sensors, 10 controllers.
    CHECK(e.devices()[0].dtype == DeviceType::Robot);
    CHECK(e.devices()[4].dtype == DeviceType::Robot);
    CHECK(e.devices()[5].dtype == DeviceType::Sensor);
    CHECK(e.devices()[14].dtype == DeviceType::Sensor);
    CHECK(e.devices()[15].dtype == DeviceType::Controller);
    CHECK(e.devices()[24].dtype == DeviceType::Controller);
    // Positions inside the factory rectangle.
    for (const auto& d : e.devices()) {
        CHECK(std::abs(d.x) <= cfg.factory_side_meters / 2);
        CHECK(std::abs(d.y) <= cfg.factory_side_meters / 2);
    }
}

TEST_CASE("single device on a single channel is forced onto channel 0") {
    Environment e(tiny_cfg(1, 0, 0, 1), 10);
    Rng rng(2);
    e.reset(rng);
    CHECK(e.allocation().assigned_subchannel[0] == 0);
    CHECK(e.allocation().current_device == 0);
}

TEST_CASE("same seed gives bit-identical initial state vectors") {
    FactoryConfig cfg;
    Environment a(cfg, 200), b(cfg, 200);
    Rng ra(77), rb(77);
    CHECK(a.reset(ra) == b.reset(rb));
}

TEST_CASE("encode_state layout") {
    FactoryConfig cfg;
    AllocationState alloc;
    const int n = cfg.n_devices();
    alloc.assigned_subchannel.assign(n, 0);
    alloc.power_level_index.assign(n, 1);
    alloc.channels.assign(n, {0, 10.0, 1.0, 0.5});
    alloc.current_device = 7;
    auto s = encode_state(alloc, cfg);
    REQUIRE(s.size() == 75);
    for (int i = 0; i < n; ++i) {
        CHECK(s[i] == 1.0); // all-equal gains normalize to ones
        CHECK(s[n + i] == 0.5);
    }
    for (int i = 0; i < n; ++i)
        CHECK(s[2 * n + i] == (i == 7 ? 1.0 : 0.0));
}

TEST_CASE("action space size and codec") {
    FactoryConfig cfg;
    CHECK(action_space_size(cfg) == 40);
    CHECK(action_space_size(tiny_cfg(1, 0, 0, 1)) == 1 * 4);
    FactoryConfig degenerate = tiny_cfg(1, 0, 0, 1);
    degenerate.power_levels = {1.0};
    CHECK(action_space_size(degenerate) == 1);
    for (int c = 0; c < cfg.n_subchannels; ++c)
        for (int l = 0; l < 4; ++l) {
            const auto [dc, dl] = decode_action(encode_action(c, l, cfg), cfg);
            CHECK(dc == c);
            CHECK(dl == l);
        }
}

TEST_CASE("reward_of analytic values") {
    CHECK(reward_of(1.0, 2.0, 0.5) == 0.0);
    CHECK(reward_of(2.0, 0.0, 123.0) == 2.0);
    CHECK(reward_of(0.0, channel::kInfiniteLatency * 1000.0, 0.1) ==
          doctest::Approx(-100.0).epsilon(1e-12));
    // Finite latencies above the cap clip to the same penalty.
    CHECK(reward_of(0.0, 5000.0, 0.1) == doctest::Approx(-100.0).epsilon(1e-12));
}

TEST_CASE("step rejects invalid actions") {
    FactoryConfig cfg;
    Environment e(cfg, 10);
    Rng rng(3);
    e.reset(rng);
    CHECK_THROWS_AS(e.step(40, rng), std::out_of_range);
    CHECK_THROWS_AS(e.step(-1, rng), std::out_of_range);
}

TEST_CASE("sole device: more power means more throughput, no interference") {
    auto cfg = tiny_cfg(1, 0, 0, 1);
    Environment lo(cfg, 10), hi(cfg, 10);
    Rng rlo(5), rhi(5);
    lo.reset(rlo);
    hi.reset(rhi);
    auto out_lo = lo.step(encode_action(0, 0, cfg), rlo);
    auto out_hi = hi.step(encode_action(0, 3, cfg), rhi);
    CHECK(out_hi.per_device_throughput_mbps[0] > out_lo.per_device_throughput_mbps[0]);
}

TEST_CASE("re-assigning the current allocation changes nothing but fading") {
    FactoryConfig cfg;
    Environment e(cfg, 10);
    Rng rng(8);
    e.reset(rng);
    const auto before_sub = e.allocation().assigned_subchannel;
    const auto before_lvl = e.allocation().power_level_index;
    const int cur = e.allocation().current_device;
    e.step(encode_action(before_sub[cur], before_lvl[cur], cfg), rng);
    CHECK(e.allocation().assigned_subchannel == before_sub);
    CHECK(e.allocation().power_level_index == before_lvl);
}

TEST_CASE("two-device fixture reward matches hand-composed computation") {
    auto cfg = tiny_cfg(1, 1, 0, 1); // both devices share the only channel
    cfg.lambda = 0.5;
    Environment e(cfg, 10);
    Rng rng(9);
    e.reset(rng);
    // Snapshot the gains the reward will be computed from (fading is redrawn
    // only after the reward).
    const double h0 = e.allocation().channels[0].gain_h;
    const double h1 = e.allocation().channels[1].gain_h;
    const int action = encode_action(0, 2, cfg); // power level 0.75 for device 0
    auto out = e.step(action, rng);

    const double p0 = cfg.power_levels[2];
    const double p1 = cfg.power_levels[0]; // device 1 still at the lowest level
    const double s = h0 * p0 / (h1 * p1 + cfg.propagation.noise_power);
    const double t = std::log2(1.0 + s);
    const double lat_ms =
        data_block_bits(DeviceType::Robot) / (t * cfg.subchannel_bandwidth_hz()) * 1e3;
    const double want = t - cfg.lambda * std::min(lat_ms, kLatencyCapMs);
    CHECK(out.reward == doctest::Approx(want).epsilon(1e-12));
    CHECK(out.per_device_throughput_mbps[0] ==
          doctest::Approx(t * cfg.subchannel_bandwidth_hz() / 1e6).epsilon(1e-12));
}

TEST_CASE("constraints hold inductively over random step sequences") {
    FactoryConfig cfg;
    Environment e(cfg, 50);
    Rng rng(13);
    auto state = e.reset(rng);
    const int n = cfg.n_devices();
    for (int t = 0; t < 500; ++t) {
        if (t % 50 == 0 && t > 0) e.reset(rng);
        const int action = static_cast<int>(rng.uniform_int(action_space_size(cfg)));
        const int cur = e.allocation().current_device;
        const auto before_sub = e.allocation().assigned_subchannel;
        const auto before_lvl = e.allocation().power_level_index;
        auto out = e.step(action, rng);
        const auto& alloc = e.allocation();
        for (int i = 0; i < n; ++i) {
            CHECK(alloc.assigned_subchannel[i] >= 0);
            CHECK(alloc.assigned_subchannel[i] < cfg.n_subchannels);
            CHECK(cfg.power_levels[alloc.power_level_index[i]] <= cfg.p_max);
            if (i != cur) {
                // Only the acted-upon device's allocation may change.
                CHECK(alloc.assigned_subchannel[i] == before_sub[i]);
                CHECK(alloc.power_level_index[i] == before_lvl[i]);
            }
        }
        // Deadline flags match the reported latencies.
        for (int i = 0; i < n; ++i) {
            const double budget_ms =
                deadline_budget_seconds(e.devices()[i].dtype) * 1e3;
            CHECK(out.deadline_violations[i] ==
                  (out.per_device_latency_ms[i] > budget_ms));
        }
    }
}

TEST_CASE("round-robin fairness over N_u consecutive steps") {
    FactoryConfig cfg;
    Environment e(cfg, 100);
    Rng rng(21);
    e.reset(rng);
    std::multiset<int> seen;
    for (int t = 0; t < cfg.n_devices(); ++t) {
        seen.insert(e.allocation().current_device);
        e.step(0, rng);
    }
    for (int i = 0; i < cfg.n_devices(); ++i) CHECK(seen.count(i) == 1);
}

TEST_CASE("lambda=0 reward equals spectral efficiency; reward decreases in lambda") {
    FactoryConfig base;
    std::vector<double> rewards;
    for (double lambda : {0.0, 0.5, 1.0}) {
        FactoryConfig cfg = base;
        cfg.lambda = lambda;
        Environment e(cfg, 10);
        Rng rng(31); // identical draws per lambda
        e.reset(rng);
        auto out = e.step(17, rng);
        if (lambda == 0.0) {
            const int acted = 0;
            const double se =
                out.per_device_throughput_mbps[acted] * 1e6 / cfg.subchannel_bandwidth_hz();
            CHECK(out.reward == doctest::Approx(se).epsilon(1e-12));
        }
        rewards.push_back(out.reward);
    }
    CHECK(rewards[0] > rewards[1]); // latency is positive here
    CHECK(rewards[1] > rewards[2]);
}

TEST_CASE("done exactly at max_timesteps") {
    FactoryConfig cfg;
    Environment e(cfg, 5);
    Rng rng(41);
    e.reset(rng);
    for (int t = 0; t < 5; ++t) {
        auto out = e.step(0, rng);
        CHECK(out.done == (t == 4));
    }
}

TEST_CASE("device type constants") {
    CHECK(data_block_bits(DeviceType::Robot) == 8 * 1500);
    CHECK(data_block_bits(DeviceType::Sensor) == 8 * 1024);
    CHECK(data_block_bits(DeviceType::Controller) == 8 * 512);
    CHECK(deadline_budget_seconds(DeviceType::Robot) == 0.1);
    CHECK(deadline_budget_seconds(DeviceType::Sensor) == 0.01);
    CHECK(deadline_budget_seconds(DeviceType::Controller) == 0.1);
}
