#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nomadqn/network.hpp"
#include "nomadqn/rng.hpp"

namespace nomadqn::dqn {

// Fixed-capacity ring of transitions; oldest entry overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 2000) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
        storage_.reserve(capacity_);
    }

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& at(std::size_t i) const { return storage_.at(i); }

    // Uniform sample with replacement.
    std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const {
        if (storage_.empty()) throw std::logic_error("ReplayBuffer: sample from empty buffer");
        std::vector<Transition> batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i)
            batch.push_back(storage_[rng.uniform_int(storage_.size())]);
        return batch;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

}  // namespace nomadqn::dqn
