#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmba/netcore.hpp"
#include "cmba/policy.hpp"

namespace cmba {

enum class Norm { LInf, L1 };

struct Budget {
    Norm p = Norm::LInf;
    double epsilon = 0.0;
};

// Feasible set for a joint-observation perturbation x at state base_obs:
// per-victim-block |x^i|_p <= epsilon, zero outside the victim blocks, and
// lower - base_obs <= x <= upper - base_obs globally.
struct ConstraintSet {
    std::vector<double> base_obs;
    std::vector<double> lower, upper;
    std::vector<std::size_t> victims; // sorted agent indices
    Budget budget;
    std::size_t block_size = 8;

    std::size_t dim() const { return base_obs.size(); }
    std::size_t n_agents() const { return base_obs.size() / block_size; }
    bool is_victim(std::size_t agent) const;
    void validate() const;

    // Membership test. The box and the linf ball are checked exactly; the l1
    // ball allows `l1_tol` slack (the alternating-projection tolerance).
    bool contains(std::span<const double> x, double l1_tol = 1e-8) const;
};

struct FailureTarget {
    std::vector<double> values;
    std::vector<std::uint8_t> mask; // 1 = coordinate enters the distance

    void validate(std::size_t dim) const;
};

struct AttackConfig {
    int steps = 30; // PGD iterations K
    // eta for the PGD update. <= 0 selects 0.1 * epsilon / |g0|_inf, the
    // constant rate whose first step moves a tenth of the budget in the
    // steepest coordinate.
    double step_size = 0.0;
    double selector_step = 0.01; // lambda for selector-network updates
    std::uint64_t seed = 0;
};

struct AttackResult {
    std::vector<double> delta;
    std::vector<double> trace; // objective after each PGD step
    // Objective of `delta` under the attack's constraint set. NaN for the
    // stochastic baselines, which have no model objective.
    double objective = 0.0;
    // Objective the optimizer itself drove (differs from `objective` for the
    // selector attack, whose optimization scales blocks by learned weights).
    double search_objective = 0.0;
    // Objective at the initial iterate; the best-iterate rule guarantees
    // objective <= initial_objective for the PGD-based attacks.
    double initial_objective = 0.0;
    bool feasible = false;
};

struct ObjectiveEval {
    double value = 0.0;
    std::vector<double> gradient;
};

// d = sum over masked coordinates of (f(s, a(delta)) - target)^2, where
// victim agents act on s^i + delta^i and the rest act on clean observations;
// f always receives the clean joint observation and predicts the
// observation change (next state = s + net([s|a])). The gradient is exact
// via the chain rule through f and each victim policy, and is zero on
// non-victim blocks.
ObjectiveEval attack_objective(const DenseNet& dynamics,
                               const std::vector<DifferentiablePolicy>& policies,
                               const ConstraintSet& c, const FailureTarget& target,
                               std::span<const double> delta);

// Exact Euclidean projection; the intersection of the linf ball and the box
// is itself a box, so this is a per-coordinate clamp.
std::vector<double> project_linf_box(std::span<const double> x, const ConstraintSet& c);

struct ProjectionDiag {
    bool converged = true;
    double residual = 0.0;
    int rounds = 0;
};

// Euclidean projection onto {per-victim l1 ball} ∩ {box} via Dykstra's
// alternating projections (sort-based soft-threshold for the ball), run to
// |change| <= 1e-10 or 2000 rounds per block. On non-convergence the result
// is still returned and *diag carries the residual.
std::vector<double> project_l1_box(std::span<const double> x, const ConstraintSet& c,
                                   ProjectionDiag* diag = nullptr);

std::vector<double> project(std::span<const double> x, const ConstraintSet& c,
                            ProjectionDiag* diag = nullptr);

// Projected gradient descent on the masked failure-state distance,
// initialized at epsilon * sign(g), g ~ N(0,1), projected. Returns the
// best iterate seen, so the reported objective never exceeds the initial
// one. epsilon == 0 returns the zero perturbation without running PGD.
AttackResult cmba_attack(const DenseNet& dynamics,
                         const std::vector<DifferentiablePolicy>& policies,
                         const ConstraintSet& c, const FailureTarget& target,
                         const AttackConfig& cfg);

// Baselines. Both sample per victim coordinate - U(-eps, eps) or N(0, eps)
// with standard deviation eps - then project onto the constraint set so all
// methods compete under identical feasibility.
AttackResult uniform_attack(const ConstraintSet& c, std::uint64_t seed);
AttackResult gaussian_attack(const ConstraintSet& c, std::uint64_t seed);

// Iterative FGSM toward the adversarial policy's target action: K signed
// gradient steps of size epsilon/K on |pi(s + delta) - a_adv|^2, projected
// after each step. The target action is the adversarial policy's response to
// the clean victim observation.
AttackResult ifgsm_attack(const std::vector<DifferentiablePolicy>& policies,
                          const DifferentiablePolicy& adversarial_policy,
                          const ConstraintSet& c, const AttackConfig& cfg);

} // namespace cmba
