#pragma once

#include <vector>

namespace nomadqn::dqn {

// Dense Q-table for small enumerable MDPs. Used as a reference rule in tests.
struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> q; // row-major, n_states x n_actions

    QTable(int states, int actions)
        : n_states(states), n_actions(actions),
          q(static_cast<std::size_t>(states) * actions, 0.0) {}

    double& at(int s, int a) { return q[static_cast<std::size_t>(s) * n_actions + a]; }
    double at(int s, int a) const { return q[static_cast<std::size_t>(s) * n_actions + a]; }

    double max_q(int s) const {
        double best = at(s, 0);
        for (int a = 1; a < n_actions; ++a) best = std::max(best, at(s, a));
        return best;
    }

    int greedy_action(int s) const {
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
            if (at(s, a) > at(s, best)) best = a;
        return best;
    }
};

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); terminal
// transitions drop the bootstrap term.
inline void tabular_q_update(QTable& table, int s, int a, double r, int s_next,
                             double alpha, double gamma, bool done = false) {
    const double bootstrap = done ? 0.0 : gamma * table.max_q(s_next);
    table.at(s, a) += alpha * (r + bootstrap - table.at(s, a));
}

}  // namespace nomadqn::dqn
