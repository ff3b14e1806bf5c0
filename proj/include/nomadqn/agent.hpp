#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "nomadqn/network.hpp"
#include "nomadqn/replay.hpp"
#include "nomadqn/rng.hpp"

namespace nomadqn::dqn {

struct AgentConfig {
    double gamma = 0.99;
    int batch_size = 64;
    double epsilon_start = 1.0;
    double epsilon_min = 0.01;
    double epsilon_decay = 0.995; // multiplicative, per episode
    int target_sync_interval = 100; // gradient steps
    std::size_t replay_capacity = 2000;
    std::vector<int> hidden_sizes = {128, 128};
    OptimizerConfig optimizer;

    void validate() const {
        if (gamma < 0.0 || gamma >= 1.0)
            throw std::invalid_argument("gamma must lie in [0, 1)");
        if (epsilon_min <= 0.0 || epsilon_min > epsilon_start || epsilon_start > 1.0)
            throw std::invalid_argument("epsilon schedule must satisfy 0 < min <= start <= 1");
        if (epsilon_decay <= 0.0 || epsilon_decay > 1.0)
            throw std::invalid_argument("epsilon_decay must lie in (0, 1]");
        if (batch_size < 1 || static_cast<std::size_t>(batch_size) > replay_capacity)
            throw std::invalid_argument("batch_size must lie in [1, replay_capacity]");
        if (target_sync_interval < 1)
            throw std::invalid_argument("target_sync_interval must be >= 1");
        if (optimizer.learning_rate <= 0.0)
            throw std::invalid_argument("learning_rate must be > 0");
        if (hidden_sizes.empty())
            throw std::invalid_argument("hidden_sizes must be non-empty");
    }
};

// Evaluation network, target network, replay buffer, and the update schedule
// tying them together. Learning starts once the buffer holds a full batch;
// one gradient step per environment step thereafter.
class DqnAgent {
public:
    DqnAgent(int state_dim, int action_count, const AgentConfig& cfg, Rng& init_rng)
        : cfg_(cfg), action_count_(action_count), replay_(cfg.replay_capacity) {
        cfg_.validate();
        std::vector<int> sizes;
        sizes.push_back(state_dim);
        for (int h : cfg_.hidden_sizes) sizes.push_back(h);
        sizes.push_back(action_count);
        eval_ = init_network(sizes, init_rng);
        target_ = sync_target(eval_);
        opt_state_ = init_optimizer(eval_);
        grads_ = zero_gradients(eval_);
        epsilon_ = cfg_.epsilon_start;
    }

    int act(std::span<const double> state, Rng& rng) {
        return select_action(eval_, state, epsilon_, rng, action_count_);
    }

    int act_greedy(std::span<const double> state) const {
        Rng dummy(0);
        return select_action(eval_, state, 0.0, dummy, action_count_);
    }

    void observe(Transition t) { replay_.push(std::move(t)); }

    // Runs one gradient step when the buffer is eligible; returns the loss.
    std::optional<double> learn(Rng& rng) {
        if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size))
            return std::nullopt;
        const auto batch = replay_.sample(cfg_.batch_size, rng);
        std::vector<double> targets(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i)
            targets[i] = bellman_target(batch[i], target_, cfg_.gamma);
        const double loss = loss_and_gradients(eval_, batch, targets, grads_);
        optimizer_step(eval_, grads_, opt_state_, cfg_.optimizer);
        if (!all_finite(eval_))
            throw std::runtime_error("learn: parameters became non-finite");
        ++gradient_steps_;
        if (gradient_steps_ % cfg_.target_sync_interval == 0)
            target_ = sync_target(eval_);
        return loss;
    }

    void end_episode() {
        epsilon_ = std::max(cfg_.epsilon_min, epsilon_ * cfg_.epsilon_decay);
    }

    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    long gradient_steps() const { return gradient_steps_; }
    const AgentConfig& config() const { return cfg_; }
    const ReplayBuffer& replay() const { return replay_; }
    const NetworkParameters& eval_params() const { return eval_; }
    const NetworkParameters& target_params() const { return target_; }
    const OptimizerState& optimizer_state() const { return opt_state_; }

    // Checkpoint restore.
    void restore(NetworkParameters eval_params, NetworkParameters target_params,
                 OptimizerState opt_state, long gradient_steps) {
        eval_ = std::move(eval_params);
        target_ = std::move(target_params);
        opt_state_ = std::move(opt_state);
        gradient_steps_ = gradient_steps;
        grads_ = zero_gradients(eval_);
    }

private:
    AgentConfig cfg_;
    int action_count_;
    NetworkParameters eval_, target_;
    OptimizerState opt_state_;
    Gradients grads_;
    ReplayBuffer replay_;
    double epsilon_ = 1.0;
    long gradient_steps_ = 0;
};

}  // namespace nomadqn::dqn
