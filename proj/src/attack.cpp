#include "cmba/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"
#include "cmba/swarmsim.hpp"

namespace cmba {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

} // namespace

bool ConstraintSet::is_victim(std::size_t agent) const {
    return std::binary_search(victims.begin(), victims.end(), agent);
}

void ConstraintSet::validate() const {
    if (block_size == 0) throw ConfigError("ConstraintSet: block_size must be positive");
    if (base_obs.empty() || base_obs.size() % block_size != 0)
        throw ShapeError("ConstraintSet: base_obs length must be a multiple of block_size");
    if (lower.size() != base_obs.size() || upper.size() != base_obs.size())
        throw ShapeError("ConstraintSet: bounds must match base_obs length");
    if (budget.epsilon < 0.0) throw ConfigError("ConstraintSet: epsilon must be nonnegative");
    if (!std::is_sorted(victims.begin(), victims.end()) ||
        std::adjacent_find(victims.begin(), victims.end()) != victims.end())
        throw ConfigError("ConstraintSet: victims must be sorted and unique");
    if (!victims.empty() && victims.back() >= n_agents())
        throw ConfigError("ConstraintSet: victim index out of range");
}

bool ConstraintSet::contains(std::span<const double> x, double l1_tol) const {
    if (x.size() != base_obs.size()) return false;
    const std::size_t n = n_agents();
    const double box_tol = budget.p == Norm::LInf ? 0.0 : l1_tol;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t off = i * block_size;
        if (!is_victim(i)) {
            for (std::size_t j = 0; j < block_size; ++j)
                if (x[off + j] != 0.0) return false;
            continue;
        }
        double l1 = 0.0;
        for (std::size_t j = 0; j < block_size; ++j) {
            const double v = x[off + j];
            if (budget.p == Norm::LInf && std::abs(v) > budget.epsilon) return false;
            l1 += std::abs(v);
            if (v < lower[off + j] - base_obs[off + j] - box_tol) return false;
            if (v > upper[off + j] - base_obs[off + j] + box_tol) return false;
        }
        if (budget.p == Norm::L1 && l1 > budget.epsilon + l1_tol) return false;
    }
    return true;
}

void FailureTarget::validate(std::size_t dim) const {
    if (values.size() != dim || mask.size() != dim)
        throw ShapeError("FailureTarget: values/mask must match the observation length");
    if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end())
        throw ConfigError("FailureTarget: mask must select at least one coordinate");
    for (double v : values)
        if (!std::isfinite(v)) throw ConfigError("FailureTarget: values must be finite");
}

ObjectiveEval attack_objective(const DenseNet& dynamics,
                               const std::vector<DifferentiablePolicy>& policies,
                               const ConstraintSet& c, const FailureTarget& target,
                               std::span<const double> delta) {
    c.validate();
    target.validate(c.dim());
    if (c.block_size != kObsPerAgent)
        throw ShapeError("attack_objective: constraint blocks must be full agent observations");
    const std::size_t n = c.n_agents();
    if (policies.size() != n) throw ShapeError("attack_objective: one policy per agent required");
    if (delta.size() != c.dim())
        throw ShapeError("attack_objective: delta length must match the observation");
    const std::size_t obs_dim = c.dim();
    const std::size_t act_dim = kActionPerAgent * n;
    if (dynamics.input_size() != obs_dim + act_dim || dynamics.output_size() != obs_dim)
        throw ShapeError("attack_objective: dynamics model dimensions do not match");

    // Actions under attack: victims see perturbed observations, f sees the
    // clean state, so the objective depends on delta only through the actions.
    std::vector<double> model_input(obs_dim + act_dim);
    std::copy(c.base_obs.begin(), c.base_obs.end(), model_input.begin());
    std::vector<std::vector<double>> victim_obs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t off = i * kObsPerAgent;
        std::span<const double> clean{c.base_obs.data() + off, kObsPerAgent};
        std::array<double, 2> a{};
        if (c.is_victim(i)) {
            victim_obs[i].assign(clean.begin(), clean.end());
            for (std::size_t j = 0; j < kObsPerAgent; ++j) victim_obs[i][j] += delta[off + j];
            a = policies[i].act(victim_obs[i]);
        } else {
            a = policies[i].act(clean);
        }
        model_input[obs_dim + 2 * i] = a[0];
        model_input[obs_dim + 2 * i + 1] = a[1];
    }

    ForwardTrace trace = forward_trace(dynamics, model_input);
    ObjectiveEval eval;
    std::vector<double> upstream(obs_dim, 0.0);
    for (std::size_t j = 0; j < obs_dim; ++j) {
        if (!target.mask[j]) continue;
        // the net predicts the observation change
        const double r = c.base_obs[j] + trace.output[j] - target.values[j];
        eval.value += r * r;
        upstream[j] = 2.0 * r;
    }

    const std::vector<double> in_grad = input_gradient(dynamics, trace, upstream);
    eval.gradient.assign(obs_dim, 0.0);
    for (std::size_t i : c.victims) {
        const Matrix jac = policies[i].act_jacobian(victim_obs[i]);
        const std::size_t off = i * kObsPerAgent;
        const double ga0 = in_grad[obs_dim + 2 * i];
        const double ga1 = in_grad[obs_dim + 2 * i + 1];
        for (std::size_t j = 0; j < kObsPerAgent; ++j)
            eval.gradient[off + j] = jac(0, j) * ga0 + jac(1, j) * ga1;
    }
    return eval;
}

std::vector<double> project_linf_box(std::span<const double> x, const ConstraintSet& c) {
    c.validate();
    if (c.budget.p != Norm::LInf)
        throw ConfigError("project_linf_box: constraint set uses a different norm");
    if (x.size() != c.dim()) throw ShapeError("project_linf_box: dimension mismatch");

    std::vector<double> out(c.dim(), 0.0);
    for (std::size_t i : c.victims) {
        const std::size_t off = i * c.block_size;
        for (std::size_t j = 0; j < c.block_size; ++j) {
            const std::size_t k = off + j;
            const double lo = std::max(c.lower[k] - c.base_obs[k], -c.budget.epsilon);
            const double hi = std::min(c.upper[k] - c.base_obs[k], c.budget.epsilon);
            if (lo > hi)
                throw ConfigError("project_linf_box: infeasible box at coordinate " +
                                  std::to_string(k));
            out[k] = std::min(std::max(x[k], lo), hi);
        }
    }
    return out;
}

namespace {

// Euclidean projection onto the l1 ball of radius eps (Duchi et al.
// sort-based soft threshold).
void project_l1_ball(std::span<double> x, double eps) {
    double l1 = 0.0;
    for (double v : x) l1 += std::abs(v);
    if (l1 <= eps) return;
    std::vector<double> mag(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) mag[j] = std::abs(x[j]);
    std::sort(mag.begin(), mag.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t r = 0; r < mag.size(); ++r) {
        cum += mag[r];
        const double cand = (cum - eps) / static_cast<double>(r + 1);
        if (mag[r] - cand > 0.0)
            tau = cand;
        else
            break;
    }
    for (double& v : x) {
        const double m = std::abs(v) - tau;
        v = m > 0.0 ? sign_of(v) * m : 0.0;
    }
}

void clamp_to(std::span<double> x, std::span<const double> lo, std::span<const double> hi) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::min(std::max(x[j], lo[j]), hi[j]);
}

} // namespace

std::vector<double> project_l1_box(std::span<const double> x, const ConstraintSet& c,
                                   ProjectionDiag* diag) {
    c.validate();
    if (c.budget.p != Norm::L1)
        throw ConfigError("project_l1_box: constraint set uses a different norm");
    if (x.size() != c.dim()) throw ShapeError("project_l1_box: dimension mismatch");
    if (diag) *diag = ProjectionDiag{};

    const double eps = c.budget.epsilon;
    std::vector<double> out(c.dim(), 0.0);
    std::vector<double> lo(c.block_size), hi(c.block_size);
    std::vector<double> y(c.block_size), p(c.block_size), q(c.block_size), box_pt(c.block_size),
        prev(c.block_size);

    for (std::size_t i : c.victims) {
        const std::size_t off = i * c.block_size;
        for (std::size_t j = 0; j < c.block_size; ++j) {
            lo[j] = c.lower[off + j] - c.base_obs[off + j];
            hi[j] = c.upper[off + j] - c.base_obs[off + j];
            if (lo[j] > hi[j])
                throw ConfigError("project_l1_box: infeasible box at coordinate " +
                                  std::to_string(off + j));
        }
        for (std::size_t j = 0; j < c.block_size; ++j) y[j] = x[off + j];

        // If the box projection alone lands inside the ball it is optimal
        // for the intersection (the intersection is a subset of the box).
        std::vector<double> boxed = y;
        clamp_to(boxed, lo, hi);
        double l1 = 0.0;
        for (double v : boxed) l1 += std::abs(v);
        if (l1 <= eps) {
            for (std::size_t j = 0; j < c.block_size; ++j) out[off + j] = boxed[j];
            continue;
        }

        // Dykstra between the box and the l1 ball. The stop test must watch
        // the correction increments as well: the iterate alone can repeat
        // for a few rounds while p and q still move it later.
        std::vector<double> z = y;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(q.begin(), q.end(), 0.0);
        std::vector<double> prev_p = p, prev_q = q;
        // Alternating projections converge linearly; rates near 1 show up
        // on near-degenerate face geometry, where 200 rounds leave ~1e-4
        // errors. The larger cap keeps the result within the 1e-5 agreement
        // bar while the warning path still covers pathological inputs.
        bool converged = false;
        int round = 0;
        double change = 0.0;
        for (; round < 2000; ++round) {
            prev = z;
            prev_p = p;
            prev_q = q;
            for (std::size_t j = 0; j < c.block_size; ++j) box_pt[j] = z[j] + p[j];
            clamp_to(box_pt, lo, hi);
            for (std::size_t j = 0; j < c.block_size; ++j) {
                p[j] = z[j] + p[j] - box_pt[j];
                z[j] = box_pt[j] + q[j];
            }
            project_l1_ball(z, eps);
            for (std::size_t j = 0; j < c.block_size; ++j) q[j] = box_pt[j] + q[j] - z[j];

            change = 0.0;
            for (std::size_t j = 0; j < c.block_size; ++j) {
                const double dz = z[j] - prev[j];
                const double dp = p[j] - prev_p[j];
                const double dq = q[j] - prev_q[j];
                change += dz * dz + dp * dp + dq * dq;
            }
            if (std::sqrt(change) <= 1e-10) {
                converged = true;
                break;
            }
        }
        if (!converged && diag) {
            diag->converged = false;
            diag->residual = std::max(diag->residual, std::sqrt(change));
        }
        if (diag) diag->rounds = std::max(diag->rounds, round + 1);
        for (std::size_t j = 0; j < c.block_size; ++j) out[off + j] = z[j];
    }
    return out;
}

std::vector<double> project(std::span<const double> x, const ConstraintSet& c,
                            ProjectionDiag* diag) {
    if (c.budget.p == Norm::LInf) {
        if (diag) *diag = ProjectionDiag{};
        return project_linf_box(x, c);
    }
    return project_l1_box(x, c, diag);
}

AttackResult cmba_attack(const DenseNet& dynamics,
                         const std::vector<DifferentiablePolicy>& policies,
                         const ConstraintSet& c, const FailureTarget& target,
                         const AttackConfig& cfg) {
    c.validate();
    if (cfg.steps < 1) throw ConfigError("cmba_attack: steps must be >= 1");

    AttackResult result;
    if (c.budget.epsilon == 0.0 || c.victims.empty()) {
        result.delta.assign(c.dim(), 0.0);
        result.objective = attack_objective(dynamics, policies, c, target, result.delta).value;
        result.search_objective = result.objective;
        result.initial_objective = result.objective;
        result.feasible = c.contains(result.delta);
        return result;
    }

    Rng rng(cfg.seed);
    std::vector<double> delta(c.dim(), 0.0);
    for (std::size_t i : c.victims) {
        const std::size_t off = i * c.block_size;
        for (std::size_t j = 0; j < c.block_size; ++j)
            delta[off + j] = c.budget.epsilon * sign_of(gaussian(rng));
    }
    delta = project(delta, c);

    ObjectiveEval eval = attack_objective(dynamics, policies, c, target, delta);
    std::vector<double> best_delta = delta;
    double best = eval.value;
    result.initial_objective = eval.value;
    // default rate: the first step moves 0.1 * epsilon along the steepest
    // coordinate; a raw 0.1 * epsilon rate stalls whenever the objective
    // gradient is small against the budget scale
    double gmax = 0.0;
    for (double g : eval.gradient) gmax = std::max(gmax, std::abs(g));
    const double eta = cfg.step_size > 0.0
                           ? cfg.step_size
                           : 0.1 * c.budget.epsilon / std::max(gmax, 1e-12);
    result.trace.reserve(static_cast<std::size_t>(cfg.steps));
    for (int k = 0; k < cfg.steps; ++k) {
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] -= eta * eval.gradient[j];
        delta = project(delta, c);
        eval = attack_objective(dynamics, policies, c, target, delta);
        result.trace.push_back(eval.value);
        if (eval.value < best) {
            best = eval.value;
            best_delta = delta;
        }
    }
    result.delta = std::move(best_delta);
    result.objective = best;
    result.search_objective = best;
    result.feasible = c.contains(result.delta);
    return result;
}

AttackResult uniform_attack(const ConstraintSet& c, std::uint64_t seed) {
    c.validate();
    Rng rng(seed);
    std::vector<double> delta(c.dim(), 0.0);
    for (std::size_t i : c.victims) {
        const std::size_t off = i * c.block_size;
        for (std::size_t j = 0; j < c.block_size; ++j)
            delta[off + j] = uniform(rng, -c.budget.epsilon, c.budget.epsilon);
    }
    AttackResult result;
    result.delta = project(delta, c);
    result.objective = kNaN;
    result.search_objective = kNaN;
    result.initial_objective = kNaN;
    result.feasible = c.contains(result.delta);
    return result;
}

AttackResult gaussian_attack(const ConstraintSet& c, std::uint64_t seed) {
    c.validate();
    Rng rng(seed);
    std::vector<double> delta(c.dim(), 0.0);
    for (std::size_t i : c.victims) {
        const std::size_t off = i * c.block_size;
        // N(0, eps) with standard deviation eps
        for (std::size_t j = 0; j < c.block_size; ++j)
            delta[off + j] = c.budget.epsilon * gaussian(rng);
    }
    AttackResult result;
    result.delta = project(delta, c);
    result.objective = kNaN;
    result.search_objective = kNaN;
    result.initial_objective = kNaN;
    result.feasible = c.contains(result.delta);
    return result;
}

namespace {

// |pi(s + delta) - a_adv|^2 summed over victim agents, with its gradient.
ObjectiveEval action_distance(const std::vector<DifferentiablePolicy>& policies,
                              const std::vector<std::array<double, 2>>& target_actions,
                              const ConstraintSet& c, std::span<const double> delta) {
    ObjectiveEval eval;
    eval.gradient.assign(c.dim(), 0.0);
    std::vector<double> obs(c.block_size);
    for (std::size_t vi = 0; vi < c.victims.size(); ++vi) {
        const std::size_t i = c.victims[vi];
        const std::size_t off = i * c.block_size;
        for (std::size_t j = 0; j < c.block_size; ++j)
            obs[j] = c.base_obs[off + j] + delta[off + j];
        const std::array<double, 2> a = policies[i].act(obs);
        const double r0 = a[0] - target_actions[vi][0];
        const double r1 = a[1] - target_actions[vi][1];
        eval.value += r0 * r0 + r1 * r1;
        const Matrix jac = policies[i].act_jacobian(obs);
        for (std::size_t j = 0; j < c.block_size; ++j)
            eval.gradient[off + j] = 2.0 * (jac(0, j) * r0 + jac(1, j) * r1);
    }
    return eval;
}

} // namespace

AttackResult ifgsm_attack(const std::vector<DifferentiablePolicy>& policies,
                          const DifferentiablePolicy& adversarial_policy,
                          const ConstraintSet& c, const AttackConfig& cfg) {
    c.validate();
    if (c.block_size != kObsPerAgent)
        throw ShapeError("ifgsm_attack: constraint blocks must be full agent observations");
    if (policies.size() != c.n_agents())
        throw ShapeError("ifgsm_attack: one policy per agent required");
    if (cfg.steps < 1) throw ConfigError("ifgsm_attack: steps must be >= 1");

    AttackResult result;
    if (c.budget.epsilon == 0.0 || c.victims.empty()) {
        result.delta.assign(c.dim(), 0.0);
        result.objective = 0.0;
        result.search_objective = 0.0;
        result.initial_objective = 0.0;
        result.feasible = c.contains(result.delta);
        return result;
    }

    std::vector<std::array<double, 2>> target_actions;
    target_actions.reserve(c.victims.size());
    for (std::size_t i : c.victims)
        target_actions.push_back(
            adversarial_policy.act({c.base_obs.data() + i * c.block_size, c.block_size}));

    const double alpha = c.budget.epsilon / static_cast<double>(cfg.steps);
    std::vector<double> delta(c.dim(), 0.0);
    ObjectiveEval eval = action_distance(policies, target_actions, c, delta);
    std::vector<double> best_delta = delta;
    double best = eval.value;
    result.initial_objective = eval.value;
    result.trace.reserve(static_cast<std::size_t>(cfg.steps));
    for (int k = 0; k < cfg.steps; ++k) {
        for (std::size_t j = 0; j < delta.size(); ++j) {
            const double g = eval.gradient[j];
            if (g > 0.0)
                delta[j] -= alpha;
            else if (g < 0.0)
                delta[j] += alpha;
        }
        delta = project(delta, c);
        eval = action_distance(policies, target_actions, c, delta);
        result.trace.push_back(eval.value);
        if (eval.value < best) {
            best = eval.value;
            best_delta = delta;
        }
    }
    result.delta = std::move(best_delta);
    result.objective = best;
    result.search_objective = best;
    result.feasible = c.contains(result.delta);
    return result;
}

} // namespace cmba
