#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "nomadqn/rng.hpp"

namespace nomadqn::dqn {

// Fully-connected network, rectifier hidden layers, identity output.
// Layer l maps in_l -> out_l with a row-major (out_l x in_l) weight matrix.
struct NetworkParameters {
    std::vector<int> layer_sizes;            // [state_dim, hidden..., action_count]
    std::vector<std::vector<double>> weights; // one flat matrix per layer
    std::vector<std::vector<double>> biases;

    std::size_t n_layers() const { return weights.size(); }
    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
};

// Glorot-uniform weights, zero biases.
inline NetworkParameters init_network(const std::vector<int>& layer_sizes, Rng& rng) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("init_network: need at least input and output layers");
    NetworkParameters p;
    p.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (auto& x : w) x = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    return p;
}

inline bool all_finite(const NetworkParameters& p) {
    for (const auto& w : p.weights)
        for (double x : w)
            if (!std::isfinite(x)) return false;
    for (const auto& b : p.biases)
        for (double x : b)
            if (!std::isfinite(x)) return false;
    return true;
}

namespace detail {

// y = W x + b
inline void affine(std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y) {
    const std::size_t out = b.size();
    const std::size_t in = x.size();
    for (std::size_t r = 0; r < out; ++r) {
        const double* row = w.data() + r * in;
        double acc = b[r];
        for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace detail

// Per-layer activations kept for the backward pass.
struct ForwardCache {
    std::vector<std::vector<double>> activations; // activations[0] is the input
};

inline std::vector<double> forward(const NetworkParameters& p,
                                   std::span<const double> state,
                                   ForwardCache* cache = nullptr) {
    if (static_cast<int>(state.size()) != p.input_dim())
        throw std::invalid_argument("forward: state dimension mismatch");
    std::vector<double> cur(state.begin(), state.end());
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(cur);
    }
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
        std::vector<double> next(p.biases[l].size());
        detail::affine(p.weights[l], p.biases[l], cur, next);
        if (l + 1 < p.n_layers())
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        cur = std::move(next);
        if (cache) cache->activations.push_back(cur);
    }
    return cur;
}

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

// y = r, or r + gamma * max_a' Q_target(s', a').
inline double bellman_target(const Transition& t, const NetworkParameters& target,
                             double gamma) {
    if (t.done) return t.reward;
    const auto q = forward(target, t.next_state);
    double best = q[0];
    for (double v : q) best = v > best ? v : best;
    return t.reward + gamma * best;
}

// Gradients with the same shapes as the parameters they refer to.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

inline Gradients zero_gradients(const NetworkParameters& p) {
    Gradients g;
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
        g.weights.emplace_back(p.weights[l].size(), 0.0);
        g.biases.emplace_back(p.biases[l].size(), 0.0);
    }
    return g;
}

// Mean squared error over the batch on the taken actions only; targets are
// constants. Returns the loss and accumulates d(loss)/d(theta).
inline double loss_and_gradients(const NetworkParameters& p,
                                 std::span<const Transition> batch,
                                 std::span<const double> targets, Gradients& grads) {
    if (batch.size() != targets.size() || batch.empty())
        throw std::invalid_argument("loss_and_gradients: batch/target size mismatch");
    const std::size_t n_layers = p.n_layers();
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::fill(grads.weights[l].begin(), grads.weights[l].end(), 0.0);
        std::fill(grads.biases[l].begin(), grads.biases[l].end(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardCache cache;
    std::vector<double> delta, delta_prev;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto& tr = batch[s];
        const auto q = forward(p, tr.state, &cache);
        if (tr.action < 0 || tr.action >= static_cast<int>(q.size()))
            throw std::invalid_argument("loss_and_gradients: action index out of range");
        const double err = q[tr.action] - targets[s];
        loss += err * err * inv_n;

        // Output delta is zero except at the taken action.
        delta.assign(q.size(), 0.0);
        delta[tr.action] = 2.0 * err * inv_n;

        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& input = cache.activations[l];
            const std::size_t out = p.biases[l].size();
            const std::size_t in = input.size();
            auto& gw = grads.weights[l];
            auto& gb = grads.biases[l];
            for (std::size_t r = 0; r < out; ++r) {
                const double d = delta[r];
                if (d == 0.0) continue;
                gb[r] += d;
                double* grow = gw.data() + r * in;
                for (std::size_t c = 0; c < in; ++c) grow[c] += d * input[c];
            }
            if (l == 0) break;
            delta_prev.assign(in, 0.0);
            const auto& w = p.weights[l];
            for (std::size_t r = 0; r < out; ++r) {
                const double d = delta[r];
                if (d == 0.0) continue;
                const double* row = w.data() + r * in;
                for (std::size_t c = 0; c < in; ++c) delta_prev[c] += d * row[c];
            }
            // Rectifier derivative gates the propagated delta.
            for (std::size_t c = 0; c < in; ++c)
                if (input[c] <= 0.0) delta_prev[c] = 0.0;
            delta = delta_prev;
        }
    }
    return loss;
}

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::vector<std::vector<double>> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    long step = 0;
};

inline OptimizerState init_optimizer(const NetworkParameters& p) {
    OptimizerState s;
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
        s.m_weights.emplace_back(p.weights[l].size(), 0.0);
        s.v_weights.emplace_back(p.weights[l].size(), 0.0);
        s.m_biases.emplace_back(p.biases[l].size(), 0.0);
        s.v_biases.emplace_back(p.biases[l].size(), 0.0);
    }
    return s;
}

namespace detail {

inline void adam_update(std::span<double> param, std::span<const double> grad,
                        std::span<double> m, std::span<double> v,
                        const OptimizerConfig& cfg, double bc1, double bc2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mh = m[i] / bc1;
        const double vh = v[i] / bc2;
        param[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    }
}

}  // namespace detail

// Applies one optimizer step in place. Non-finite gradients leave the
// parameters untouched and raise.
inline void optimizer_step(NetworkParameters& p, const Gradients& g,
                           OptimizerState& state, const OptimizerConfig& cfg) {
    for (const auto& gw : g.weights)
        for (double x : gw)
            if (!std::isfinite(x)) throw std::runtime_error("optimizer_step: non-finite gradient");
    for (const auto& gb : g.biases)
        for (double x : gb)
            if (!std::isfinite(x)) throw std::runtime_error("optimizer_step: non-finite gradient");

    ++state.step;
    if (cfg.kind == OptimizerKind::Sgd) {
        for (std::size_t l = 0; l < p.n_layers(); ++l) {
            for (std::size_t i = 0; i < p.weights[l].size(); ++i)
                p.weights[l][i] -= cfg.learning_rate * g.weights[l][i];
            for (std::size_t i = 0; i < p.biases[l].size(); ++i)
                p.biases[l][i] -= cfg.learning_rate * g.biases[l][i];
        }
        return;
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
        detail::adam_update(p.weights[l], g.weights[l], state.m_weights[l],
                            state.v_weights[l], cfg, bc1, bc2);
        detail::adam_update(p.biases[l], g.biases[l], state.m_biases[l],
                            state.v_biases[l], cfg, bc1, bc2);
    }
}

// Epsilon-greedy; greedy ties break toward the lowest index.
inline int select_action(const NetworkParameters& p, std::span<const double> state,
                         double epsilon, Rng& rng, int action_count) {
    if (epsilon > 0.0 && rng.uniform01() < epsilon)
        return static_cast<int>(rng.uniform_int(action_count));
    const auto q = forward(p, state);
    int best = 0;
    for (int a = 1; a < static_cast<int>(q.size()); ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

// Deep copy for the target network.
inline NetworkParameters sync_target(const NetworkParameters& eval_params) {
    return eval_params;
}

}  // namespace nomadqn::dqn
