#pragma once

#include <array>
#include <span>

#include "cmba/matrix.hpp"
#include "cmba/netcore.hpp"

namespace cmba {

enum class PolicyKind { ScriptedExpert, ScriptedAntiExpert, DenseNetPolicy };

// Per-agent policy mapping an 8-dim local observation to a 2-dim action in
// [-1,1]^2, with an exact input Jacobian. The scripted expert steers toward
// the goal, a = tanh(k_p * goal_offset - k_d * velocity); the anti-expert
// negates the argument. tanh squashing (rather than a hard clamp) keeps the
// Jacobian nonzero at the action bounds. Immutable once constructed.
class DifferentiablePolicy {
public:
    static DifferentiablePolicy scripted_expert(double k_p = 1.0, double k_d = 0.5);
    static DifferentiablePolicy scripted_anti_expert(double k_p = 1.0, double k_d = 0.5);
    static DifferentiablePolicy from_net(DenseNet net);

    std::array<double, 2> act(std::span<const double> obs) const;
    Matrix act_jacobian(std::span<const double> obs) const; // 2 x 8

    PolicyKind kind() const { return kind_; }
    double kp() const { return kp_; }
    double kd() const { return kd_; }
    const DenseNet& net() const { return net_; }

private:
    DifferentiablePolicy(PolicyKind kind, double kp, double kd)
        : kind_(kind), kp_(kp), kd_(kd) {}

    PolicyKind kind_;
    double kp_ = 0.0, kd_ = 0.0;
    DenseNet net_;
};

struct CloneResult {
    DifferentiablePolicy policy;
    double holdout_mse = 0.0;
    double chosen_lr = 0.0;
};

// Behavior cloning: regress teacher actions on the given observation rows
// (one 8-dim observation per row). The cloned net has two tanh hidden layers
// of 64 and a tanh output head.
CloneResult behavior_clone(const DifferentiablePolicy& teacher, const Matrix& states,
                           const TrainConfig& cfg);

} // namespace cmba
