#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmba/attack.hpp"
#include "cmba/dynlearn.hpp"
#include "cmba/policy.hpp"
#include "cmba/swarmsim.hpp"
#include "cmba/victimselect.hpp"

namespace cmba {

enum class AttackMethod { None, Uniform, Gaussian, Ifgsm, Cmba };

const char* method_name(AttackMethod m);
AttackMethod method_from_name(const std::string& name);
const char* norm_name(Norm p);

struct ExperimentConfig {
    EnvSpec env;
    std::string policy_source = "scripted"; // "scripted" | "cloned"
    std::string policy_path;                // net container, required when cloned
    double expert_kp = 1.0;
    double expert_kd = 0.5;
    std::string dynamics_model_path;
    std::vector<AttackMethod> methods = {AttackMethod::None, AttackMethod::Uniform,
                                         AttackMethod::Gaussian, AttackMethod::Ifgsm,
                                         AttackMethod::Cmba};
    SelectionConfig selection;
    std::vector<Budget> budgets = {{Norm::LInf, 0.025}, {Norm::LInf, 0.05},
                                   {Norm::LInf, 0.1},  {Norm::LInf, 0.2}};
    AttackConfig attack;
    std::size_t episodes = 16;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";

    void validate() const;
};

// Strict JSON config: "version" must equal 1 and unknown keys are errors,
// so a typo in an epsilon grid cannot pass silently. Missing keys fall back
// to the defaults above. The full schema is documented in the README.
ExperimentConfig load_config(const std::string& path);
std::string victim_label(const SelectionConfig& s);

struct TimestepRow {
    std::vector<double> obs;   // clean joint observation s_t
    std::vector<double> delta; // applied perturbation
    std::vector<double> action;
    double reward = 0.0;
    double objective = 0.0; // attack objective, NaN when the method has none
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::size_t length = 0;
    double total_reward = 0.0;
    std::vector<TimestepRow> rows;
};

// Immutable models/policies shared by every episode of a run.
struct RuntimeBundle {
    std::vector<DifferentiablePolicy> policies;
    DifferentiablePolicy anti_expert = DifferentiablePolicy::scripted_anti_expert();
    std::optional<DenseNet> dynamics;
    FailureTarget target;
    std::vector<double> obs_lower, obs_upper;
};

// Loads policies and the dynamics model (required iff any method is cmba),
// and builds the default failure target: all velocity coordinates driven to
// zero, mask covering exactly those coordinates.
RuntimeBundle build_runtime(const ExperimentConfig& cfg);

// One seeded episode under one method/budget. Victims see perturbed
// observations, everyone else acts on clean ones; the true environment
// always steps on the resulting joint action. Fully deterministic per seed.
EpisodeRecord run_episode(const ExperimentConfig& cfg, const RuntimeBundle& rt,
                          AttackMethod method, const Budget& budget, std::uint64_t seed);

struct EpisodeSummary {
    std::string method;
    std::string norm;
    double epsilon = 0.0;
    std::string victim;
    std::uint64_t seed = 0;
    std::size_t length = 0;
    double total_reward = 0.0;
};

struct CellResult {
    std::string method;
    std::string norm;
    double epsilon = 0.0;
    std::string victim;
    std::size_t n_v = 0;
    std::size_t episodes = 0;
    double mean_reward = 0.0;
    double std_reward = 0.0;
    double mean_length = 0.0;
    std::string status = "ok"; // "ok" or "failed: <reason>"
};

struct SweepResult {
    std::vector<CellResult> cells;
    std::vector<EpisodeSummary> episodes;
};

// Runs every (method x budget) cell over cfg.episodes paired episodes;
// episode k always uses base_seed + k so methods compare on identical
// environment realizations. A failing cell is recorded and the sweep
// continues.
SweepResult sweep_budget(const ExperimentConfig& cfg, const RuntimeBundle& rt);

// states.csv and perturbations.csv (one row per timestep, 8n columns with
// coordinate names), suitable for heat-map rendering.
void emit_traces(const EpisodeRecord& record, const EnvSpec& spec, const std::string& dir);

void write_cells_csv(const std::vector<CellResult>& cells, const std::string& path);
void write_episodes_csv(const std::vector<EpisodeSummary>& rows, const std::string& path);
std::vector<CellResult> load_cells_csv(const std::string& path);

// One SVG per (norm, victim) pane: mean reward vs epsilon per method with a
// +-1 std shaded band, legend in table order. Also rewrites cells.csv next
// to the plots. Output bytes are a pure function of the table.
void emit_report(const std::vector<CellResult>& cells, const std::string& dir);

} // namespace cmba
