#pragma once

#include <cstdint>
#include <vector>

#include "cmba/attack.hpp"
#include "cmba/netcore.hpp"

namespace cmba {

// Softmax-output network distributing perturbation weight across agents:
// joint observation (8n) -> weights (n), entries in [0,1] summing to 1. The
// final layer starts zero-initialized, so an untrained selector weights all
// agents uniformly.
struct SelectorNetwork {
    DenseNet net;
};

SelectorNetwork make_selector(std::size_t n_agents,
                              const std::vector<std::size_t>& hidden = {64, 64},
                              std::uint64_t seed = 0);

std::vector<double> selector_forward(const SelectorNetwork& sel,
                                     std::span<const double> joint_obs);

enum class SelectionStrategy { Fixed, Random, Greedy, Learned, LearnedPlusAlg1 };

struct SelectionConfig {
    std::size_t n_v = 1;
    SelectionStrategy strategy = SelectionStrategy::Fixed;
    std::vector<std::size_t> fixed_set = {0};
    bool warm_start = false; // carry selector parameters across timesteps
    std::vector<std::size_t> selector_hidden = {64, 64};
};

struct SubsetRecord {
    std::vector<std::size_t> victims;
    double objective = 0.0;
};

struct SelectionResult {
    std::vector<std::size_t> victims;
    AttackResult result;
    std::vector<SubsetRecord> sweep; // greedy only: every swept subset
};

// Joint PGD over the perturbation and the selector parameters: victims are
// all agents during optimization, each agent i acting on
// s^i + W_i(s;theta) * delta^i. After K steps the n_v agents with the
// largest selector outputs are kept (ties break toward the lowest index)
// and the returned perturbation is the final unscaled iterate on those
// blocks, zero elsewhere. result.objective scores the returned vector;
// result.search_objective is the last weighted objective the optimizer saw.
// The selector is updated in place.
SelectionResult learned_select_attack(const DenseNet& dynamics,
                                      const std::vector<DifferentiablePolicy>& policies,
                                      const ConstraintSet& c_template,
                                      const FailureTarget& target, SelectorNetwork& sel,
                                      const AttackConfig& cfg, std::size_t n_v);

// Exhaustive sweep over all size-n_v subsets (n <= 8), running the PGD
// attack on each; keeps the subset with the smallest final objective,
// lexicographically smallest on ties. The full per-subset table is returned.
SelectionResult greedy_select_attack(const DenseNet& dynamics,
                                     const std::vector<DifferentiablePolicy>& policies,
                                     const ConstraintSet& c_template,
                                     const FailureTarget& target, const AttackConfig& cfg,
                                     std::size_t n_v);

// Dispatch over the configured strategy. `sel` is only used by the learned
// strategies; with warm_start=false (the default) a fresh selector is
// re-initialized from cfg.seed at every call, keeping timesteps independent.
SelectionResult strategy_attack(const SelectionConfig& selection, const DenseNet& dynamics,
                                const std::vector<DifferentiablePolicy>& policies,
                                const ConstraintSet& c_template, const FailureTarget& target,
                                const AttackConfig& cfg, SelectorNetwork* sel = nullptr);

} // namespace cmba
