// Command-line front end: dynamics-model training, behavior cloning,
// single-episode attacks with trace recordings, full budget sweeps, and
// report re-rendering from saved tables.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmba/dynlearn.hpp"
#include "cmba/harness.hpp"
#include "cmba/rng.hpp"

using namespace cmba;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return load_config(path);
}

std::vector<DifferentiablePolicy> expert_team(const ExperimentConfig& cfg) {
    std::vector<DifferentiablePolicy> team;
    for (std::size_t i = 0; i < cfg.env.n_agents; ++i)
        team.push_back(DifferentiablePolicy::scripted_expert(cfg.expert_kp, cfg.expert_kd));
    return team;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-based adversarial attacks on a cooperative swarm benchmark"};
    app.require_subcommand(1);

    // --- train-dynamics ------------------------------------------------
    auto* train = app.add_subcommand("train-dynamics",
                                     "collect transitions and fit the dynamics model");
    std::string tr_config, tr_out = "dynamics.bin", tr_dataset;
    std::size_t tr_samples = 50000, tr_epochs = 10, tr_batch = 256;
    double tr_mix = 0.5, tr_decay = 1e-4;
    std::vector<double> tr_lrs;
    std::vector<std::size_t> tr_hidden = {128, 128, 128};
    std::uint64_t tr_seed = 1;
    train->add_option("--config", tr_config, "experiment config file");
    train->add_option("--out", tr_out, "output model path");
    train->add_option("--samples", tr_samples, "number of transitions to collect");
    train->add_option("--epochs", tr_epochs, "training epochs");
    train->add_option("--batch", tr_batch, "batch size");
    train->add_option("--lr", tr_lrs, "learning-rate grid (repeatable)");
    train->add_option("--hidden", tr_hidden, "hidden layer sizes");
    train->add_option("--mix-ratio", tr_mix, "fraction of samples from the expert policy");
    train->add_option("--weight-decay", tr_decay, "AdamW weight decay");
    train->add_option("--seed", tr_seed, "collection/training seed");
    train->add_option("--save-dataset", tr_dataset, "also write the transition csv here");

    // --- clone-policy ---------------------------------------------------
    auto* clone = app.add_subcommand("clone-policy", "behavior-clone the scripted expert");
    std::string cl_config, cl_out = "policy.bin";
    std::size_t cl_samples = 50000, cl_epochs = 25, cl_batch = 256;
    std::vector<double> cl_lrs;
    std::uint64_t cl_seed = 1;
    clone->add_option("--config", cl_config, "experiment config file");
    clone->add_option("--out", cl_out, "output policy path");
    clone->add_option("--samples", cl_samples, "number of observations to collect");
    clone->add_option("--epochs", cl_epochs, "training epochs");
    clone->add_option("--batch", cl_batch, "batch size");
    clone->add_option("--lr", cl_lrs, "learning-rate grid (repeatable)");
    clone->add_option("--seed", cl_seed, "collection/training seed");

    // --- attack -----------------------------------------------------------
    auto* atk = app.add_subcommand("attack", "run one episode and record traces");
    std::string at_config, at_method = "cmba", at_norm = "inf", at_out = "attack_out";
    double at_eps = 0.1;
    std::uint64_t at_seed = 1;
    atk->add_option("--config", at_config, "experiment config file")->required();
    atk->add_option("--method", at_method, "none|uniform|gaussian|ifgsm|cmba");
    atk->add_option("--p", at_norm, "budget norm: inf|1");
    atk->add_option("--epsilon", at_eps, "budget epsilon");
    atk->add_option("--seed", at_seed, "episode seed")->required();
    atk->add_option("--out", at_out, "trace output directory");

    // --- sweep -----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "full budget sweep with csv + svg output");
    std::string sw_config, sw_out;
    std::uint64_t sw_seed = 0;
    sweep->add_option("--config", sw_config, "experiment config file")->required();
    sweep->add_option("--seed", sw_seed, "base seed for paired episodes")->required();
    sweep->add_option("--out", sw_out, "output directory (overrides config)");

    // --- report -----------------------------------------------------------
    auto* report = app.add_subcommand("report", "re-render plots from a cells.csv table");
    std::string rp_cells, rp_out = "report_out";
    report->add_option("--cells", rp_cells, "cells.csv produced by sweep")->required();
    report->add_option("--out", rp_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            ExperimentConfig cfg = config_or_default(tr_config);
            TransitionDataset data = collect_transitions(cfg.env, expert_team(cfg),
                                                         DataSource::Mixed, tr_samples,
                                                         tr_seed, tr_mix);
            if (!tr_dataset.empty()) save_dataset_csv(data, tr_dataset);
            TrainConfig tc;
            tc.epochs = tr_epochs;
            tc.batch_size = tr_batch;
            tc.weight_decay = tr_decay;
            tc.seed = splitmix64(tr_seed ^ 0x666974ull);
            if (!tr_lrs.empty()) tc.lr_grid = tr_lrs;
            DynamicsModel model = train_dynamics(data, tc, tr_hidden, tr_seed);
            save_net(model.net, tr_out);
            std::printf("dynamics model -> %s\n", tr_out.c_str());
            std::printf("  samples=%zu epochs=%zu lr=%g\n", model.sample_count, model.epochs,
                        model.chosen_lr);
            std::printf("  test_mse=%.6g identity_mse=%.6g ratio=%.4f\n", model.test_mse,
                        model.identity_mse,
                        model.identity_mse > 0 ? model.test_mse / model.identity_mse : 0.0);
        } else if (*clone) {
            ExperimentConfig cfg = config_or_default(cl_config);
            TransitionDataset data = collect_transitions(cfg.env, expert_team(cfg),
                                                         DataSource::Mixed, cl_samples, cl_seed);
            // per-agent observations become the cloning inputs
            Matrix states(data.transitions.size() * cfg.env.n_agents, kObsPerAgent);
            std::size_t r = 0;
            for (const Transition& t : data.transitions)
                for (std::size_t i = 0; i < cfg.env.n_agents; ++i, ++r)
                    std::copy_n(t.obs.begin() + static_cast<long>(i * kObsPerAgent),
                                kObsPerAgent, states.row(r).begin());
            TrainConfig tc;
            tc.epochs = cl_epochs;
            tc.batch_size = cl_batch;
            tc.seed = splitmix64(cl_seed ^ 0x636c6f6eull);
            if (!cl_lrs.empty()) tc.lr_grid = cl_lrs;
            DifferentiablePolicy teacher =
                DifferentiablePolicy::scripted_expert(cfg.expert_kp, cfg.expert_kd);
            CloneResult cr = behavior_clone(teacher, states, tc);
            save_net(cr.policy.net(), cl_out);
            std::printf("cloned policy -> %s  (holdout action mse %.6g, lr %g)\n",
                        cl_out.c_str(), cr.holdout_mse, cr.chosen_lr);
        } else if (*atk) {
            ExperimentConfig cfg = load_config(at_config);
            cfg.methods = {method_from_name(at_method)};
            RuntimeBundle rt = build_runtime(cfg);
            Budget budget{at_norm == "inf" ? Norm::LInf : Norm::L1, at_eps};
            EpisodeRecord rec = run_episode(cfg, rt, cfg.methods.front(), budget, at_seed);
            emit_traces(rec, cfg.env, at_out);
            std::printf("episode seed=%llu method=%s p=%s eps=%g victims=%s\n",
                        static_cast<unsigned long long>(at_seed), at_method.c_str(),
                        at_norm.c_str(), at_eps, victim_label(cfg.selection).c_str());
            std::printf("  length=%zu total_reward=%.6f traces -> %s\n", rec.length,
                        rec.total_reward, at_out.c_str());
        } else if (*sweep) {
            ExperimentConfig cfg = load_config(sw_config);
            cfg.base_seed = sw_seed;
            if (!sw_out.empty()) cfg.output_dir = sw_out;
            RuntimeBundle rt = build_runtime(cfg);
            SweepResult res = sweep_budget(cfg, rt);
            std::filesystem::create_directories(cfg.output_dir);
            write_episodes_csv(res.episodes, cfg.output_dir + "/episodes.csv");
            emit_report(res.cells, cfg.output_dir);
            std::printf("sweep: %zu cells, %zu episode rows -> %s\n", res.cells.size(),
                        res.episodes.size(), cfg.output_dir.c_str());
            for (const CellResult& c : res.cells)
                std::printf("  %-9s p=%-3s eps=%-7g %-14s mean=%9.3f std=%8.3f len=%6.1f %s\n",
                            c.method.c_str(), c.norm.c_str(), c.epsilon, c.victim.c_str(),
                            c.mean_reward, c.std_reward, c.mean_length, c.status.c_str());
        } else if (*report) {
            std::vector<CellResult> cells = load_cells_csv(rp_cells);
            emit_report(cells, rp_out);
            std::printf("report: %zu cells -> %s\n", cells.size(), rp_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
