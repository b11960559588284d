#include "cmba/victimselect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"
#include "cmba/swarmsim.hpp"

namespace cmba {

namespace {

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

std::vector<std::size_t> top_k_indices(const std::vector<double>& weights, std::size_t k) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // stable sort keeps index order within ties, so exact ties resolve to
    // the lowest agent index
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

ConstraintSet with_victims(const ConstraintSet& c, std::vector<std::size_t> victims) {
    ConstraintSet out = c;
    out.victims = std::move(victims);
    return out;
}

std::vector<std::size_t> all_agents(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

} // namespace

SelectorNetwork make_selector(std::size_t n_agents, const std::vector<std::size_t>& hidden,
                              std::uint64_t seed) {
    if (n_agents == 0) throw ConfigError("make_selector: n_agents must be positive");
    std::vector<std::size_t> sizes;
    sizes.push_back(kObsPerAgent * n_agents);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(n_agents);
    return SelectorNetwork{
        make_dense_net(sizes, Activation::Tanh, Activation::Softmax, seed)};
}

std::vector<double> selector_forward(const SelectorNetwork& sel,
                                     std::span<const double> joint_obs) {
    return forward(sel.net, joint_obs);
}

SelectionResult learned_select_attack(const DenseNet& dynamics,
                                      const std::vector<DifferentiablePolicy>& policies,
                                      const ConstraintSet& c_template,
                                      const FailureTarget& target, SelectorNetwork& sel,
                                      const AttackConfig& cfg, std::size_t n_v) {
    c_template.validate();
    if (c_template.block_size != kObsPerAgent)
        throw ShapeError("learned_select_attack: constraint blocks must be agent observations");
    const std::size_t n = c_template.n_agents();
    if (n_v < 1 || n_v > n) throw ConfigError("learned_select_attack: n_v must be in [1, n]");
    if (policies.size() != n)
        throw ShapeError("learned_select_attack: one policy per agent required");
    if (sel.net.input_size() != c_template.dim() || sel.net.output_size() != n)
        throw ShapeError("learned_select_attack: selector dimensions do not match");
    if (cfg.steps < 1) throw ConfigError("learned_select_attack: steps must be >= 1");
    target.validate(c_template.dim());

    const std::size_t obs_dim = c_template.dim();
    const std::size_t act_dim = kActionPerAgent * n;
    if (dynamics.input_size() != obs_dim + act_dim || dynamics.output_size() != obs_dim)
        throw ShapeError("learned_select_attack: dynamics model dimensions do not match");

    // During optimization every agent is perturbable; the weights decide how
    // much noise each one actually receives.
    ConstraintSet c_all = with_victims(c_template, all_agents(n));
    const std::span<const double> s{c_all.base_obs};

    SelectionResult out;
    if (c_all.budget.epsilon == 0.0) {
        const std::vector<double> w = selector_forward(sel, s);
        out.victims = top_k_indices(w, n_v);
        ConstraintSet c_sel = with_victims(c_template, out.victims);
        out.result.delta.assign(obs_dim, 0.0);
        out.result.objective =
            attack_objective(dynamics, policies, c_sel, target, out.result.delta).value;
        out.result.search_objective = out.result.objective;
        out.result.initial_objective = out.result.objective;
        out.result.feasible = c_sel.contains(out.result.delta);
        return out;
    }

    double eta = cfg.step_size; // auto-scaled at the first iteration when <= 0
    const double lambda = cfg.selector_step;

    Rng rng(cfg.seed);
    std::vector<double> delta(obs_dim, 0.0);
    for (std::size_t j = 0; j < obs_dim; ++j)
        delta[j] = c_all.budget.epsilon * sign_of(gaussian(rng));
    delta = project(delta, c_all);

    std::vector<double> model_input(obs_dim + act_dim);
    std::copy(c_all.base_obs.begin(), c_all.base_obs.end(), model_input.begin());
    std::vector<double> scaled_obs(kObsPerAgent);
    std::vector<double> delta_grad(obs_dim, 0.0);
    std::vector<double> weight_grad(n, 0.0);
    double last_objective = 0.0;

    out.result.trace.reserve(static_cast<std::size_t>(cfg.steps));
    for (int k = 0; k < cfg.steps; ++k) {
        ForwardTrace sel_trace = forward_trace(sel.net, s);
        const std::vector<double>& w = sel_trace.output;

        std::vector<Matrix> jacobians(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t off = i * kObsPerAgent;
            for (std::size_t j = 0; j < kObsPerAgent; ++j)
                scaled_obs[j] = c_all.base_obs[off + j] + w[i] * delta[off + j];
            const std::array<double, 2> a = policies[i].act(scaled_obs);
            model_input[obs_dim + 2 * i] = a[0];
            model_input[obs_dim + 2 * i + 1] = a[1];
            jacobians[i] = policies[i].act_jacobian(scaled_obs);
        }

        ForwardTrace dyn_trace = forward_trace(dynamics, model_input);
        double d = 0.0;
        std::vector<double> upstream(obs_dim, 0.0);
        for (std::size_t j = 0; j < obs_dim; ++j) {
            if (!target.mask[j]) continue;
            // the net predicts the observation change
            const double r = c_all.base_obs[j] + dyn_trace.output[j] - target.values[j];
            d += r * r;
            upstream[j] = 2.0 * r;
        }
        last_objective = d;
        out.result.trace.push_back(d);

        const std::vector<double> in_grad = input_gradient(dynamics, dyn_trace, upstream);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t off = i * kObsPerAgent;
            const double ga0 = in_grad[obs_dim + 2 * i];
            const double ga1 = in_grad[obs_dim + 2 * i + 1];
            double dw = 0.0;
            for (std::size_t j = 0; j < kObsPerAgent; ++j) {
                // h_j = d(objective)/d(perturbed obs coordinate j)
                const double h = jacobians[i](0, j) * ga0 + jacobians[i](1, j) * ga1;
                delta_grad[off + j] = w[i] * h;
                dw += delta[off + j] * h;
            }
            weight_grad[i] = dw;
        }

        if (eta <= 0.0) {
            double gmax = 0.0;
            for (double g : delta_grad) gmax = std::max(gmax, std::abs(g));
            eta = 0.1 * c_all.budget.epsilon / std::max(gmax, 1e-12);
        }
        for (std::size_t j = 0; j < obs_dim; ++j) delta[j] -= eta * delta_grad[j];
        delta = project(delta, c_all);

        const ParamGradients pg = parameter_gradients(sel.net, sel_trace, weight_grad);
        for (std::size_t l = 0; l < sel.net.layer_count(); ++l) {
            auto& wdata = sel.net.weights[l].data;
            for (std::size_t j = 0; j < wdata.size(); ++j)
                wdata[j] -= lambda * pg.weights[l].data[j];
            auto& bdata = sel.net.biases[l];
            for (std::size_t j = 0; j < bdata.size(); ++j) bdata[j] -= lambda * pg.biases[l][j];
        }
    }

    const std::vector<double> w_final = selector_forward(sel, s);
    out.victims = top_k_indices(w_final, n_v);

    // Return rule: keep the final unscaled iterate on the selected blocks,
    // zero elsewhere. Each block already satisfies its own lp/box
    // constraint, so the returned vector stays feasible.
    out.result.delta.assign(obs_dim, 0.0);
    for (std::size_t i : out.victims) {
        const std::size_t off = i * kObsPerAgent;
        for (std::size_t j = 0; j < kObsPerAgent; ++j)
            out.result.delta[off + j] = delta[off + j];
    }
    ConstraintSet c_sel = with_victims(c_template, out.victims);
    out.result.objective =
        attack_objective(dynamics, policies, c_sel, target, out.result.delta).value;
    out.result.search_objective = last_objective;
    out.result.initial_objective = out.result.trace.front();
    out.result.feasible = c_sel.contains(out.result.delta);
    return out;
}

SelectionResult greedy_select_attack(const DenseNet& dynamics,
                                     const std::vector<DifferentiablePolicy>& policies,
                                     const ConstraintSet& c_template,
                                     const FailureTarget& target, const AttackConfig& cfg,
                                     std::size_t n_v) {
    c_template.validate();
    const std::size_t n = c_template.n_agents();
    if (n > 8)
        throw ConfigError("greedy_select_attack: subset sweep supports at most 8 agents; "
                          "use the learned strategy for larger teams");
    if (n_v < 1 || n_v > n) throw ConfigError("greedy_select_attack: n_v must be in [1, n]");

    SelectionResult out;
    bool have_best = false;

    std::vector<std::size_t> subset(n_v);
    // lexicographic enumeration of size-n_v subsets of {0..n-1}
    std::iota(subset.begin(), subset.end(), std::size_t{0});
    while (true) {
        ConstraintSet c_sub = with_victims(c_template, subset);
        AttackResult r = cmba_attack(dynamics, policies, c_sub, target, cfg);
        out.sweep.push_back({subset, r.objective});
        if (!have_best || r.objective < out.result.objective) {
            have_best = true;
            out.victims = subset;
            out.result = std::move(r);
        }
        // advance to the next combination
        std::size_t i = n_v;
        while (i > 0 && subset[i - 1] == n - n_v + i - 1) --i;
        if (i == 0) break;
        ++subset[i - 1];
        for (std::size_t j = i; j < n_v; ++j) subset[j] = subset[j - 1] + 1;
    }
    return out;
}

SelectionResult strategy_attack(const SelectionConfig& selection, const DenseNet& dynamics,
                                const std::vector<DifferentiablePolicy>& policies,
                                const ConstraintSet& c_template, const FailureTarget& target,
                                const AttackConfig& cfg, SelectorNetwork* sel) {
    c_template.validate();
    const std::size_t n = c_template.n_agents();
    if (selection.n_v < 1 || selection.n_v > n)
        throw ConfigError("strategy_attack: n_v must be in [1, n]");

    switch (selection.strategy) {
    case SelectionStrategy::Fixed: {
        std::vector<std::size_t> victims = selection.fixed_set;
        std::sort(victims.begin(), victims.end());
        if (victims.size() != selection.n_v ||
            std::adjacent_find(victims.begin(), victims.end()) != victims.end() ||
            (!victims.empty() && victims.back() >= n))
            throw ConfigError("strategy_attack: fixed set must hold n_v distinct agents");
        SelectionResult out;
        out.victims = victims;
        out.result = cmba_attack(dynamics, policies, with_victims(c_template, victims), target,
                                 cfg);
        return out;
    }
    case SelectionStrategy::Random: {
        // seeded uniform size-n_v subset via partial Fisher-Yates
        Rng rng(splitmix64(cfg.seed ^ 0x72616e64ull));
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < selection.n_v; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> victims(pool.begin(),
                                         pool.begin() + static_cast<long>(selection.n_v));
        std::sort(victims.begin(), victims.end());
        SelectionResult out;
        out.victims = victims;
        out.result = cmba_attack(dynamics, policies, with_victims(c_template, victims), target,
                                 cfg);
        return out;
    }
    case SelectionStrategy::Greedy:
        return greedy_select_attack(dynamics, policies, c_template, target, cfg, selection.n_v);
    case SelectionStrategy::Learned:
    case SelectionStrategy::LearnedPlusAlg1: {
        SelectorNetwork local;
        SelectorNetwork* active = sel;
        if (!selection.warm_start || active == nullptr) {
            local = make_selector(n, selection.selector_hidden,
                                  splitmix64(cfg.seed ^ 0x73656c65ull));
            active = &local;
        }
        SelectionResult learned = learned_select_attack(dynamics, policies, c_template, target,
                                                        *active, cfg, selection.n_v);
        if (selection.strategy == SelectionStrategy::Learned) return learned;

        AttackConfig second = cfg;
        second.seed = splitmix64(cfg.seed ^ 0x616c6731ull);
        SelectionResult out;
        out.victims = learned.victims;
        out.result = cmba_attack(dynamics, policies, with_victims(c_template, learned.victims),
                                 target, second);
        // keep the selection stage's perturbation when the restarted solve
        // lands worse; the combined strategy never returns a weaker attack
        // than selection alone
        if (learned.result.objective < out.result.objective) out.result = learned.result;
        return out;
    }
    }
    throw ConfigError("strategy_attack: unknown strategy");
}

} // namespace cmba
