#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nomadqn/network.hpp"

namespace nomadqn::dqn {

// Checkpoint layout: one JSON header line, '\n', then little-endian IEEE-754
// doubles, flat, in this order: per layer eval W then b; per layer target W
// then b; per layer Adam m_W, v_W, m_b, v_b.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    NetworkParameters eval_params;
    NetworkParameters target_params;
    OptimizerState opt_state;
    long gradient_steps = 0;
};

namespace detail {

inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swapping here");
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void read_doubles(std::istream& is, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json header;
    header["format"] = "noma-dqn-checkpoint";
    header["version"] = kCheckpointVersion;
    header["layer_sizes"] = ck.eval_params.layer_sizes;
    header["gradient_steps"] = ck.gradient_steps;
    header["optimizer_step"] = ck.opt_state.step;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os << header.dump() << '\n';
    for (std::size_t l = 0; l < ck.eval_params.n_layers(); ++l) {
        detail::write_doubles(os, ck.eval_params.weights[l]);
        detail::write_doubles(os, ck.eval_params.biases[l]);
    }
    for (std::size_t l = 0; l < ck.target_params.n_layers(); ++l) {
        detail::write_doubles(os, ck.target_params.weights[l]);
        detail::write_doubles(os, ck.target_params.biases[l]);
    }
    for (std::size_t l = 0; l < ck.eval_params.n_layers(); ++l) {
        detail::write_doubles(os, ck.opt_state.m_weights[l]);
        detail::write_doubles(os, ck.opt_state.v_weights[l]);
        detail::write_doubles(os, ck.opt_state.m_biases[l]);
        detail::write_doubles(os, ck.opt_state.v_biases[l]);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string header_line;
    if (!std::getline(is, header_line))
        throw std::runtime_error("checkpoint: missing header");
    nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.value("format", "") != "noma-dqn-checkpoint")
        throw std::runtime_error("checkpoint: unrecognized format");
    if (header.value("version", 0) != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version");

    Checkpoint ck;
    const std::vector<int> sizes = header.at("layer_sizes").get<std::vector<int>>();
    ck.gradient_steps = header.at("gradient_steps").get<long>();

    auto read_net = [&](NetworkParameters& p) {
        p.layer_sizes = sizes;
        p.weights.clear();
        p.biases.clear();
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            std::vector<double> w, b;
            detail::read_doubles(is, w, static_cast<std::size_t>(sizes[l]) * sizes[l + 1]);
            detail::read_doubles(is, b, static_cast<std::size_t>(sizes[l + 1]));
            p.weights.push_back(std::move(w));
            p.biases.push_back(std::move(b));
        }
    };
    read_net(ck.eval_params);
    read_net(ck.target_params);
    ck.opt_state.step = header.at("optimizer_step").get<long>();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t nw = static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
        const std::size_t nb = static_cast<std::size_t>(sizes[l + 1]);
        ck.opt_state.m_weights.emplace_back();
        ck.opt_state.v_weights.emplace_back();
        ck.opt_state.m_biases.emplace_back();
        ck.opt_state.v_biases.emplace_back();
        detail::read_doubles(is, ck.opt_state.m_weights.back(), nw);
        detail::read_doubles(is, ck.opt_state.v_weights.back(), nw);
        detail::read_doubles(is, ck.opt_state.m_biases.back(), nb);
        detail::read_doubles(is, ck.opt_state.v_biases.back(), nb);
    }
    return ck;
}

}  // namespace nomadqn::dqn
