#include "cmba/swarmsim.hpp"

#include <algorithm>
#include <cmath>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"

namespace cmba {

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

} // namespace

void EnvSpec::validate() const {
    if (n_agents == 0) throw ConfigError("EnvSpec: n_agents must be positive");
    if (dt <= 0.0) throw ConfigError("EnvSpec: dt must be positive");
    if (damping < 0.0 || damping >= 1.0) throw ConfigError("EnvSpec: damping must be in [0, 1)");
    if (arena_half_width <= 0.0) throw ConfigError("EnvSpec: arena_half_width must be positive");
    if (v_max <= 0.0) throw ConfigError("EnvSpec: v_max must be positive");
    if (horizon == 0) throw ConfigError("EnvSpec: horizon must be positive");
    if (discount <= 0.0 || discount > 1.0) throw ConfigError("EnvSpec: discount must be in (0, 1]");
}

SwarmEnv::SwarmEnv(EnvSpec spec) : spec_(spec) {
    spec_.validate();
    pos_.assign(2 * spec_.n_agents, 0.0);
    vel_.assign(2 * spec_.n_agents, 0.0);
    goal_offset_.assign(2 * spec_.n_agents, 0.0);
}

std::vector<double> SwarmEnv::reset(std::uint64_t seed) {
    Rng rng(seed);
    const double half = spec_.arena_half_width / 2.0;
    for (double& c : pos_) c = uniform(rng, -half, half);
    for (std::size_t k = 0; k < goal_offset_.size(); ++k)
        goal_offset_[k] = uniform(rng, -half, half) - pos_[k];
    std::fill(vel_.begin(), vel_.end(), 0.0);
    t_ = 0;
    done_ = false;
    return observation();
}

void SwarmEnv::restore(std::vector<double> positions, std::vector<double> velocities,
                       std::vector<double> goal_offsets, std::size_t timestep) {
    const std::size_t want = 2 * spec_.n_agents;
    if (positions.size() != want || velocities.size() != want || goal_offsets.size() != want)
        throw ShapeError("SwarmEnv::restore: state vectors must have length 2*n_agents");
    pos_ = std::move(positions);
    vel_ = std::move(velocities);
    goal_offset_ = std::move(goal_offsets);
    t_ = timestep;
    done_ = false;
}

std::vector<double> SwarmEnv::observation() const {
    const std::size_t n = spec_.n_agents;
    std::vector<double> obs(spec_.obs_dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = 0.0, my = 0.0;
        if (n > 1) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                mx += pos_[2 * j] - pos_[2 * i];
                my += pos_[2 * j + 1] - pos_[2 * i + 1];
            }
            mx /= static_cast<double>(n - 1);
            my /= static_cast<double>(n - 1);
        }
        double* o = obs.data() + kObsPerAgent * i;
        o[0] = pos_[2 * i];
        o[1] = pos_[2 * i + 1];
        o[2] = vel_[2 * i];
        o[3] = vel_[2 * i + 1];
        o[4] = goal_offset_[2 * i];
        o[5] = goal_offset_[2 * i + 1];
        o[6] = mx;
        o[7] = my;
    }
    return obs;
}

StepResult SwarmEnv::step(std::span<const double> joint_action) {
    if (done_) throw ConfigError("SwarmEnv::step called on a finished episode");
    if (joint_action.size() != spec_.action_dim())
        throw ShapeError("SwarmEnv::step: joint action must have length 2*n_agents");

    const std::size_t n = spec_.n_agents;
    const double L = spec_.arena_half_width;
    const double keep = 1.0 - spec_.damping;

    double align = 0.0;
    double action_sq = 0.0;
    bool boundary = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = clip(joint_action[2 * i], -1.0, 1.0);
        const double ay = clip(joint_action[2 * i + 1], -1.0, 1.0);
        action_sq += ax * ax + ay * ay;

        // goal direction from the pre-step position
        const double gx = goal_offset_[2 * i];
        const double gy = goal_offset_[2 * i + 1];
        const double gn = std::sqrt(gx * gx + gy * gy);

        const double vx = clip(keep * vel_[2 * i] + spec_.dt * ax, -spec_.v_max, spec_.v_max);
        const double vy = clip(keep * vel_[2 * i + 1] + spec_.dt * ay, -spec_.v_max, spec_.v_max);
        vel_[2 * i] = vx;
        vel_[2 * i + 1] = vy;
        if (gn > 1e-6) align += (vx * gx + vy * gy) / gn;

        const double px = clip(pos_[2 * i] + spec_.dt * vx, -L, L);
        const double py = clip(pos_[2 * i + 1] + spec_.dt * vy, -L, L);
        goal_offset_[2 * i] -= px - pos_[2 * i];
        goal_offset_[2 * i + 1] -= py - pos_[2 * i + 1];
        pos_[2 * i] = px;
        pos_[2 * i + 1] = py;
        if (std::abs(px) >= L || std::abs(py) >= L) boundary = true;
    }

    ++t_;
    done_ = boundary || t_ >= spec_.horizon;

    StepResult res;
    res.reward = align / static_cast<double>(n) - 0.01 * action_sq;
    res.done = done_;
    res.obs = observation();
    return res;
}

std::pair<std::vector<double>, std::vector<double>> observation_bounds(const EnvSpec& spec) {
    spec.validate();
    const double L = spec.arena_half_width;
    std::vector<double> lower(spec.obs_dim()), upper(spec.obs_dim());
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
        double* lo = lower.data() + kObsPerAgent * i;
        double* hi = upper.data() + kObsPerAgent * i;
        lo[0] = lo[1] = -L;
        hi[0] = hi[1] = L;
        lo[2] = lo[3] = -spec.v_max;
        hi[2] = hi[3] = spec.v_max;
        lo[4] = lo[5] = lo[6] = lo[7] = -2.0 * L;
        hi[4] = hi[5] = hi[6] = hi[7] = 2.0 * L;
    }
    return {std::move(lower), std::move(upper)};
}

} // namespace cmba
