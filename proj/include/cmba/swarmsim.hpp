#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cmba {

// Coordinates per agent in a joint observation:
//   [0,1] own position, [2,3] own velocity, [4,5] offset to own goal,
//   [6,7] mean offset to the other agents.
inline constexpr std::size_t kObsPerAgent = 8;
inline constexpr std::size_t kActionPerAgent = 2;

struct EnvSpec {
    std::size_t n_agents = 4;
    double dt = 0.1;
    double damping = 0.1;           // velocity retention factor is (1 - damping)
    double arena_half_width = 10.0; // positions live in [-L, L]^2
    double v_max = 2.0;
    std::size_t horizon = 200;
    double discount = 1.0; // reporting only; episode totals are undiscounted

    std::size_t obs_dim() const { return kObsPerAgent * n_agents; }
    std::size_t action_dim() const { return kActionPerAgent * n_agents; }
    void validate() const; // throws ConfigError
};

struct StepResult {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
};

// Deterministic n-agent point-mass swarm with damped double-integrator
// dynamics. Per agent and step, with clipped actions a in [-1,1]^2:
//
//   v' = clip((1 - damping) * v + dt * a, +-v_max)
//   p' = clip(p + dt * v', +-L)
//
// Team reward is (1/n) * sum_i <v'_i, u_i> - 0.01 * |a|^2 where u_i is the
// unit vector from p_i toward goal_i (zero within 1e-6 of the goal) and the
// action norm runs over the joint action. An episode ends after `horizon`
// steps or as soon as any agent touches the arena boundary.
class SwarmEnv {
public:
    explicit SwarmEnv(EnvSpec spec);

    // Agents start at seeded uniform positions in the inner half of the
    // arena with zero velocity; goals are seeded the same way. Identical
    // seeds give identical episodes.
    std::vector<double> reset(std::uint64_t seed);

    StepResult step(std::span<const double> joint_action);

    std::vector<double> observation() const;
    const EnvSpec& spec() const { return spec_; }
    std::size_t timestep() const { return t_; }
    bool done() const { return done_; }

    // Restores a fully specified simulator state. The goal offsets are the
    // per-agent [4,5] observation coordinates, so a recorded joint
    // observation restores the exact simulator state. Used to replay
    // recorded transitions and to freeze single-step instances.
    void restore(std::vector<double> positions, std::vector<double> velocities,
                 std::vector<double> goal_offsets, std::size_t timestep);

    std::span<const double> positions() const { return pos_; }
    std::span<const double> velocities() const { return vel_; }
    std::span<const double> goal_offsets() const { return goal_offset_; }

private:
    EnvSpec spec_;
    std::vector<double> pos_, vel_, goal_offset_;
    std::size_t t_ = 0;
    bool done_ = true;
};

// Per-coordinate box bounds (lower, upper) that every reachable joint
// observation satisfies.
std::pair<std::vector<double>, std::vector<double>> observation_bounds(const EnvSpec& spec);

} // namespace cmba
