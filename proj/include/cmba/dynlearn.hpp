#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmba/netcore.hpp"
#include "cmba/policy.hpp"
#include "cmba/swarmsim.hpp"

namespace cmba {

enum class DataSource { TrainedPolicy, RandomPolicy, Mixed };

struct Transition {
    std::vector<double> obs;
    std::vector<double> action;
    std::vector<double> next_obs;
    double reward = 0.0;
    bool done = false;
};

struct TransitionDataset {
    DataSource source = DataSource::Mixed;
    std::vector<Transition> transitions;
    std::size_t n_trained = 0;
    std::size_t n_random = 0;
};

// Rolls episodes until exactly n_samples transitions are recorded.
// TrainedPolicy uses the given per-agent policies; RandomPolicy draws actions
// uniformly in [-1,1]^2 per agent. Mixed concatenates both sources with
// mix_ratio of the samples coming from the trained policy. Deterministic per
// seed.
TransitionDataset collect_transitions(const EnvSpec& spec,
                                      const std::vector<DifferentiablePolicy>& policies,
                                      DataSource source, std::size_t n_samples,
                                      std::uint64_t seed, double mix_ratio = 0.5);

// Dynamics nets map (obs_dim + action_dim) -> obs_dim and predict the
// observation *change*; the next-state prediction is obs + net([obs|action]).
// Regressing the change is equivalent to regressing the next state (targets
// shift by a constant) but keeps the targets O(dt), which a tanh net fits
// without observation normalization.
struct DynamicsModel {
    DenseNet net;
    double test_mse = 0.0;
    double identity_mse = 0.0; // same test set, predictor next_obs = obs
    std::size_t sample_count = 0;
    std::size_t epochs = 0;
    double chosen_lr = 0.0;
};

// One-step dynamics regression. Terminal transitions are dropped (the
// environment contract leaves post-termination observations undefined); the
// remaining rows are shuffled with `seed`, 10% become a disjoint test set,
// and the rest go through fit_regression. test_mse / identity_mse are
// recorded on the test split.
DynamicsModel train_dynamics(const TransitionDataset& data, const TrainConfig& cfg,
                             const std::vector<std::size_t>& hidden = {128, 128, 128},
                             std::uint64_t seed = 0);

// Predicted next observation obs + net([obs|action]).
std::vector<double> predict_next(const DenseNet& net, std::span<const double> obs,
                                 std::span<const double> action);

// Mean over the dataset of |predict_next(net, obs, action) - next_obs|^2.
double eval_mse(const DenseNet& net, const TransitionDataset& test);

// One transition per row: obs | action | next_obs | reward | done.
void save_dataset_csv(const TransitionDataset& data, const std::string& path);
TransitionDataset load_dataset_csv(const std::string& path);

} // namespace cmba
