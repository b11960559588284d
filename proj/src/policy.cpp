#include "cmba/policy.hpp"

#include <cmath>

#include "cmba/errors.hpp"
#include "cmba/swarmsim.hpp"

namespace cmba {

DifferentiablePolicy DifferentiablePolicy::scripted_expert(double k_p, double k_d) {
    return DifferentiablePolicy(PolicyKind::ScriptedExpert, k_p, k_d);
}

DifferentiablePolicy DifferentiablePolicy::scripted_anti_expert(double k_p, double k_d) {
    return DifferentiablePolicy(PolicyKind::ScriptedAntiExpert, k_p, k_d);
}

DifferentiablePolicy DifferentiablePolicy::from_net(DenseNet net) {
    validate_net(net);
    if (net.input_size() != kObsPerAgent || net.output_size() != kActionPerAgent)
        throw ShapeError("policy net must map 8 observation values to 2 actions");
    DifferentiablePolicy p(PolicyKind::DenseNetPolicy, 0.0, 0.0);
    p.net_ = std::move(net);
    return p;
}

std::array<double, 2> DifferentiablePolicy::act(std::span<const double> obs) const {
    if (obs.size() != kObsPerAgent)
        throw ShapeError("policy observation must have 8 coordinates");
    switch (kind_) {
    case PolicyKind::ScriptedExpert:
        return {std::tanh(kp_ * obs[4] - kd_ * obs[2]), std::tanh(kp_ * obs[5] - kd_ * obs[3])};
    case PolicyKind::ScriptedAntiExpert:
        return {std::tanh(-kp_ * obs[4] + kd_ * obs[2]), std::tanh(-kp_ * obs[5] + kd_ * obs[3])};
    case PolicyKind::DenseNetPolicy: {
        std::vector<double> a = forward(net_, obs);
        return {a[0], a[1]};
    }
    }
    return {0.0, 0.0};
}

Matrix DifferentiablePolicy::act_jacobian(std::span<const double> obs) const {
    if (obs.size() != kObsPerAgent)
        throw ShapeError("policy observation must have 8 coordinates");
    Matrix jac(kActionPerAgent, kObsPerAgent);
    switch (kind_) {
    case PolicyKind::ScriptedExpert:
    case PolicyKind::ScriptedAntiExpert: {
        const double s = kind_ == PolicyKind::ScriptedExpert ? 1.0 : -1.0;
        // action axis r reads velocity coordinate 2+r and goal offset 4+r
        for (std::size_t r = 0; r < 2; ++r) {
            const double u = s * (kp_ * obs[4 + r] - kd_ * obs[2 + r]);
            const double th = std::tanh(u);
            const double sech2 = 1.0 - th * th;
            jac(r, 4 + r) = s * kp_ * sech2;
            jac(r, 2 + r) = -s * kd_ * sech2;
        }
        return jac;
    }
    case PolicyKind::DenseNetPolicy: {
        ForwardTrace trace = forward_trace(net_, obs);
        std::vector<double> upstream(kActionPerAgent, 0.0);
        for (std::size_t r = 0; r < kActionPerAgent; ++r) {
            upstream[r] = 1.0;
            std::vector<double> g = input_gradient(net_, trace, upstream);
            upstream[r] = 0.0;
            std::copy(g.begin(), g.end(), jac.row(r).begin());
        }
        return jac;
    }
    }
    return jac;
}

CloneResult behavior_clone(const DifferentiablePolicy& teacher, const Matrix& states,
                           const TrainConfig& cfg) {
    if (states.rows == 0) throw ConfigError("behavior_clone: empty state set");
    if (states.cols != kObsPerAgent)
        throw ShapeError("behavior_clone: states must have 8 columns");

    Matrix targets(states.rows, kActionPerAgent);
    for (std::size_t r = 0; r < states.rows; ++r) {
        const std::array<double, 2> a = teacher.act(states.row(r));
        targets(r, 0) = a[0];
        targets(r, 1) = a[1];
    }
    DenseNet net = make_dense_net({kObsPerAgent, 64, 64, kActionPerAgent}, Activation::Tanh,
                                  Activation::Tanh, cfg.seed);
    FitResult fit = fit_regression(net, states, targets, cfg);
    CloneResult result{DifferentiablePolicy::from_net(std::move(fit.net)), fit.holdout_mse,
                       fit.chosen_lr};
    return result;
}

} // namespace cmba
