// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Criteria are property checks against independent oracles
// plus qualitative ordering checks of the benchmark experiments on the
// substitute environment.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cmba/attack.hpp"
#include "cmba/dynlearn.hpp"
#include "cmba/harness.hpp"
#include "cmba/rng.hpp"
#include "cmba/victimselect.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace cmba;

namespace {

struct CriterionFail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& msg) {
    if (!ok) throw CriterionFail(msg);
}

std::string fmtnum(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

int g_failures = 0;

template <class Fn>
void criterion(int num, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
        detail = fn();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d. %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", num, name.c_str(),
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

struct Fixtures {
    std::string dir;
    EnvSpec env4;            // default benchmark environment
    DynamicsModel model4;    // full dynamics model
    DynamicsModel degraded4; // 20% of the samples, one epoch
    EnvSpec env2;
    DynamicsModel model2;

    std::string model4_path, degraded4_path;
};

Fixtures build_fixtures() {
    Fixtures fx;
    fx.dir = "acceptance_out";
    std::filesystem::create_directories(fx.dir);

    const std::vector<DifferentiablePolicy> team4(fx.env4.n_agents,
                                                  DifferentiablePolicy::scripted_expert());
    const TransitionDataset data4 =
        collect_transitions(fx.env4, team4, DataSource::Mixed, 50000, 1);

    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 256;
    cfg.lr_grid = {1e-3};
    cfg.seed = 2;
    fx.model4 = train_dynamics(data4, cfg, {128, 128, 128}, 3);
    fx.model4_path = fx.dir + "/dynamics4.bin";
    save_net(fx.model4.net, fx.model4_path);

    // degraded: a fifth of the data for a single epoch
    const TransitionDataset small4 =
        collect_transitions(fx.env4, team4, DataSource::Mixed, 10000, 1);
    TrainConfig dcfg = cfg;
    dcfg.epochs = 1;
    fx.degraded4 = train_dynamics(small4, dcfg, {128, 128, 128}, 3);
    fx.degraded4_path = fx.dir + "/dynamics4_degraded.bin";
    save_net(fx.degraded4.net, fx.degraded4_path);

    fx.env2.n_agents = 2;
    const std::vector<DifferentiablePolicy> team2(2, DifferentiablePolicy::scripted_expert());
    const TransitionDataset data2 =
        collect_transitions(fx.env2, team2, DataSource::Mixed, 20000, 5);
    TrainConfig cfg2 = cfg;
    cfg2.seed = 6;
    fx.model2 = train_dynamics(data2, cfg2, {64, 64, 64}, 7);
    return fx;
}

ExperimentConfig benchmark_config(const Fixtures& fx, const std::string& model_path) {
    ExperimentConfig cfg;
    cfg.env = fx.env4;
    cfg.dynamics_model_path = model_path;
    cfg.selection.strategy = SelectionStrategy::Fixed;
    cfg.selection.n_v = 1;
    cfg.selection.fixed_set = {0};
    cfg.episodes = 16;
    cfg.base_seed = 1;
    cfg.attack.steps = 30;
    return cfg;
}

std::map<std::string, CellResult> run_cells(const ExperimentConfig& cfg) {
    const RuntimeBundle rt = build_runtime(cfg);
    const SweepResult res = sweep_budget(cfg, rt);
    std::map<std::string, CellResult> by_method;
    for (const CellResult& c : res.cells) {
        expect(c.status == "ok", "cell " + c.method + " failed: " + c.status);
        by_method[c.method] = c;
    }
    return by_method;
}

FailureTarget velocity_target(const EnvSpec& spec) {
    FailureTarget t;
    t.values.assign(spec.obs_dim(), 0.0);
    t.mask.assign(spec.obs_dim(), 0);
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
        t.mask[i * kObsPerAgent + 2] = 1;
        t.mask[i * kObsPerAgent + 3] = 1;
    }
    return t;
}

ConstraintSet constraints_at(const EnvSpec& spec, std::vector<double> obs, Norm p, double eps,
                             std::vector<std::size_t> victims) {
    ConstraintSet c;
    c.base_obs = std::move(obs);
    auto bounds = observation_bounds(spec);
    c.lower = std::move(bounds.first);
    c.upper = std::move(bounds.second);
    c.budget = {p, eps};
    c.victims = std::move(victims);
    c.block_size = kObsPerAgent;
    return c;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

std::string criterion_projections() {
    Rng rng(4001);
    double max_l1_err = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t dim = 2 + static_cast<std::size_t>(rep % 3);
        const double eps = uniform(rng, 0.05, 0.6);
        std::vector<double> base(dim), lo(dim), hi(dim), x(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            base[j] = uniform(rng, -0.5, 0.5);
            lo[j] = base[j] - uniform(rng, 0.05, 1.0);
            hi[j] = base[j] + uniform(rng, 0.05, 1.0);
            x[j] = uniform(rng, -2.5 * eps, 2.5 * eps);
        }
        ConstraintSet c;
        c.base_obs = base;
        c.lower = lo;
        c.upper = hi;
        c.budget = {Norm::L1, eps};
        c.victims = {0};
        c.block_size = dim;
        const std::vector<double> got = project_l1_box(x, c);
        std::vector<double> blo(dim), bhi(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            blo[j] = lo[j] - base[j];
            bhi[j] = hi[j] - base[j];
        }
        const std::vector<double> want = testutil::l1_box_projection_oracle(x, blo, bhi, eps);
        for (std::size_t j = 0; j < dim; ++j)
            max_l1_err = std::max(max_l1_err, std::abs(got[j] - want[j]));

        c.budget.p = Norm::LInf;
        const std::vector<double> gi = project_linf_box(x, c);
        for (std::size_t j = 0; j < dim; ++j) {
            // independent recomputation of the closed-form clamp
            const double lo_j = std::max(blo[j], -eps);
            const double hi_j = std::min(bhi[j], eps);
            const double clamped = std::min(std::max(x[j], lo_j), hi_j);
            expect(gi[j] == clamped, "linf projection differs from the closed-form clamp");
        }
    }
    expect(max_l1_err <= 1e-5,
           "l1 projection vs oracle: max coordinate error " + fmtnum(max_l1_err));
    return "1000 points, dims 2-4; l1 max err " + fmtnum(max_l1_err) + " <= 1e-5; linf exact";
}

std::string criterion_gradients(const Fixtures& fx) {
    double worst = 0.0;
    // network input gradients
    Rng rng(4101);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t in = 3 + static_cast<std::size_t>(rng() % 9);
        const std::size_t out = 2 + static_cast<std::size_t>(rng() % 4);
        const DenseNet net = make_dense_net({in, 10, 8, out}, Activation::Tanh,
                                            Activation::Identity, 5000 + rep);
        std::vector<double> x(in), up(out);
        for (double& v : x) v = uniform(rng, -1.5, 1.5);
        for (double& v : up) v = uniform(rng, -2.0, 2.0);
        const std::vector<double> g = input_gradient(net, x, up);
        const auto loss = [&](std::span<const double> xv) {
            const std::vector<double> y = forward(net, xv);
            double s = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j) s += up[j] * y[j];
            return s;
        };
        worst = std::max(worst, testutil::rel_err(testutil::central_diff(loss, x), g));
    }
    const double net_worst = worst;
    expect(net_worst <= 1e-4, "input_gradient rel err " + fmtnum(net_worst));

    // policy jacobians, all three kinds
    worst = 0.0;
    const DifferentiablePolicy kinds[3] = {
        DifferentiablePolicy::scripted_expert(),
        DifferentiablePolicy::scripted_anti_expert(0.8, 0.6),
        DifferentiablePolicy::from_net(
            make_dense_net({8, 16, 16, 2}, Activation::Tanh, Activation::Tanh, 5200))};
    for (int rep = 0; rep < 100; ++rep) {
        const DifferentiablePolicy& p = kinds[rep % 3];
        std::vector<double> obs(kObsPerAgent);
        for (double& v : obs) v = uniform(rng, -3.0, 3.0);
        const Matrix jac = p.act_jacobian(obs);
        for (std::size_t r = 0; r < 2; ++r) {
            const auto f = [&](std::span<const double> o) { return p.act(o)[r]; };
            worst = std::max(worst,
                             testutil::rel_err(testutil::central_diff(f, obs), jac.row(r)));
        }
    }
    const double jac_worst = worst;
    expect(jac_worst <= 1e-4, "act_jacobian rel err " + fmtnum(jac_worst));

    // composed attack objective through the trained 2-agent model
    worst = 0.0;
    const std::vector<DifferentiablePolicy> team(2, DifferentiablePolicy::scripted_expert());
    const FailureTarget target = velocity_target(fx.env2);
    SwarmEnv env(fx.env2);
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> obs = env.reset(5300 + static_cast<std::uint64_t>(rep));
        const std::vector<std::size_t> victims =
            rep % 2 == 0 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 1};
        const ConstraintSet c = constraints_at(fx.env2, obs, Norm::LInf, 0.1, victims);
        std::vector<double> delta(c.dim(), 0.0);
        for (std::size_t i : victims)
            for (std::size_t j = 0; j < kObsPerAgent; ++j)
                delta[i * kObsPerAgent + j] = uniform(rng, -0.1, 0.1);
        const ObjectiveEval eval =
            attack_objective(fx.model2.net, team, c, target, delta);
        const auto f = [&](std::span<const double> d) {
            return attack_objective(fx.model2.net, team, c, target, d).value;
        };
        worst = std::max(worst, testutil::rel_err(testutil::central_diff(f, delta),
                                                  eval.gradient));
    }
    expect(worst <= 1e-4, "composed objective rel err " + fmtnum(worst));
    return "100 instances each; rel err: net " + fmtnum(net_worst) + ", jacobian " +
           fmtnum(jac_worst) + ", objective " + fmtnum(worst) + " <= 1e-4";
}

std::string criterion_one_step(const Fixtures& fx) {
    const double eps = 0.1;
    const std::vector<DifferentiablePolicy> team(2, DifferentiablePolicy::scripted_expert());
    const FailureTarget target = velocity_target(fx.env2);

    // frozen instance: expert rollout to step 30 on a fixed seed
    SwarmEnv env(fx.env2);
    std::vector<double> obs = env.reset(5);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> a(fx.env2.action_dim());
        for (std::size_t i = 0; i < 2; ++i) {
            const auto ai = team[i].act({obs.data() + i * kObsPerAgent, kObsPerAgent});
            a[2 * i] = ai[0];
            a[2 * i + 1] = ai[1];
        }
        obs = env.step(a).obs;
    }
    const ConstraintSet c = constraints_at(fx.env2, obs, Norm::LInf, eps, {0});
    for (std::size_t j = 2; j <= 5; ++j) {
        expect(obs[j] - c.lower[j] > 1.5 * eps && c.upper[j] - obs[j] > 1.5 * eps,
               "frozen instance is not interior enough for the lattice oracle");
    }

    AttackConfig cfg;
    cfg.steps = 30;
    cfg.seed = 9;
    const AttackResult res = cmba_attack(fx.model2.net, team, c, target, cfg);
    expect(res.feasible, "attack result infeasible");

    // Exhaustive grid optimum. The scripted expert reads only the victim's
    // velocity (k_d = 0.5) and goal-offset (k_p = 1) coordinates, and the
    // model sees the perturbation only through the victim's action, so the
    // 8-dim grid with step eps/20 reduces exactly to the lattice
    // u = u0 + m * eps/40, m in [-60, 60], per action axis.
    const double kp = 1.0, kd = 0.5;
    double u0[2];
    u0[0] = kp * obs[4] - kd * obs[2];
    u0[1] = kp * obs[5] - kd * obs[3];
    const std::array<double, 2> other =
        team[1].act({obs.data() + kObsPerAgent, kObsPerAgent});
    const std::size_t obs_dim = fx.env2.obs_dim();
    std::vector<double> input(obs_dim + fx.env2.action_dim());
    std::copy(obs.begin(), obs.end(), input.begin());
    input[obs_dim + 2] = other[0];
    input[obs_dim + 3] = other[1];
    double grid_best = 1e300;
    for (int mx = -60; mx <= 60; ++mx) {
        for (int my = -60; my <= 60; ++my) {
            input[obs_dim] = std::tanh(u0[0] + mx * eps / 40.0);
            input[obs_dim + 1] = std::tanh(u0[1] + my * eps / 40.0);
            const std::vector<double> pred = forward(fx.model2.net, input);
            double d = 0.0;
            for (std::size_t j = 0; j < obs_dim; ++j) {
                if (!target.mask[j]) continue;
                const double r = obs[j] + pred[j] - target.values[j];
                d += r * r;
            }
            grid_best = std::min(grid_best, d);
        }
    }
    expect(res.objective <= 1.05 * grid_best + 1e-12,
           "PGD " + fmtnum(res.objective) + " vs grid optimum " + fmtnum(grid_best));
    return "PGD objective " + fmtnum(res.objective) + " <= 1.05 x grid optimum " +
           fmtnum(grid_best);
}

std::string criterion_exp1(const Fixtures& fx) {
    expect(fx.model4.test_mse <= 0.1 * fx.model4.identity_mse,
           "model quality: test mse " + fmtnum(fx.model4.test_mse) + " vs identity " +
               fmtnum(fx.model4.identity_mse));

    ExperimentConfig cfg = benchmark_config(fx, fx.model4_path);
    cfg.methods = {AttackMethod::None, AttackMethod::Uniform, AttackMethod::Gaussian,
                   AttackMethod::Ifgsm, AttackMethod::Cmba};
    cfg.budgets = {{Norm::LInf, 0.1}};
    const RuntimeBundle rt = build_runtime(cfg);
    const SweepResult res = sweep_budget(cfg, rt);
    std::map<std::string, CellResult> cells;
    for (const CellResult& c : res.cells) {
        expect(c.status == "ok", "cell " + c.method + ": " + c.status);
        cells[c.method] = c;
    }
    const double none = cells["none"].mean_reward;
    const double cmba = cells["cmba"].mean_reward;
    const double gauss = cells["gaussian"].mean_reward;
    const double unif = cells["uniform"].mean_reward;
    expect(cmba < gauss, "cmba mean " + fmtnum(cmba) + " !< gaussian " + fmtnum(gauss));
    expect(cmba < unif, "cmba mean " + fmtnum(cmba) + " !< uniform " + fmtnum(unif));
    const double best_baseline_red = std::max(none - gauss, none - unif);
    expect(none - cmba >= 1.3 * best_baseline_red,
           "reduction " + fmtnum(none - cmba) + " < 1.3 x " + fmtnum(best_baseline_red));

    // paired per-seed comparison
    std::map<std::uint64_t, double> none_by_seed, cmba_by_seed;
    for (const EpisodeSummary& ep : res.episodes) {
        if (ep.method == "none") none_by_seed[ep.seed] = ep.total_reward;
        if (ep.method == "cmba") cmba_by_seed[ep.seed] = ep.total_reward;
    }
    int strict = 0;
    for (const auto& [seed, r] : none_by_seed)
        if (cmba_by_seed[seed] < r) ++strict;
    expect(strict >= 14, "cmba below no-attack on only " + std::to_string(strict) + "/16 seeds");

    return "mse ratio " + fmtnum(fx.model4.test_mse / fx.model4.identity_mse) +
           "; means none " + fmtnum(none) + ", uniform " + fmtnum(unif) + ", gaussian " +
           fmtnum(gauss) + ", ifgsm " + fmtnum(cells["ifgsm"].mean_reward) + ", cmba " +
           fmtnum(cmba) + "; reduction x" +
           fmtnum((none - cmba) / std::max(best_baseline_red, 1e-12)) + "; " +
           std::to_string(strict) + "/16 seeds strict";
}

std::string criterion_exp2(const Fixtures& fx) {
    ExperimentConfig cfg = benchmark_config(fx, fx.model4_path);
    cfg.methods = {AttackMethod::None, AttackMethod::Uniform, AttackMethod::Cmba};
    cfg.budgets = {{Norm::L1, 1.0}};
    const auto cells = run_cells(cfg);
    const double cmba = cells.at("cmba").mean_reward;
    const double unif = cells.at("uniform").mean_reward;
    expect(cmba < unif, "cmba mean " + fmtnum(cmba) + " !< uniform " + fmtnum(unif));
    return "l1 eps=1: uniform " + fmtnum(unif) + ", cmba " + fmtnum(cmba);
}

std::string criterion_exp3(const Fixtures& fx) {
    expect(fx.degraded4.test_mse > fx.model4.test_mse,
           "degraded model unexpectedly as good as the full one");
    ExperimentConfig cfg = benchmark_config(fx, fx.degraded4_path);
    cfg.methods = {AttackMethod::Gaussian, AttackMethod::Cmba};
    cfg.budgets = {{Norm::LInf, 0.1}};
    const auto cells = run_cells(cfg);
    const double cmba = cells.at("cmba").mean_reward;
    const double gauss = cells.at("gaussian").mean_reward;
    expect(cmba < gauss, "degraded cmba mean " + fmtnum(cmba) + " !< gaussian " + fmtnum(gauss));
    return "degraded mse " + fmtnum(fx.degraded4.test_mse) + " (full " +
           fmtnum(fx.model4.test_mse) + "); gaussian " + fmtnum(gauss) + ", cmba " +
           fmtnum(cmba);
}

std::string criterion_exp4(const Fixtures& fx) {
    // learned selection + plain attack vs random selection, paired episodes
    ExperimentConfig cfg = benchmark_config(fx, fx.model4_path);
    cfg.methods = {AttackMethod::Cmba};
    cfg.budgets = {{Norm::LInf, 0.1}};
    cfg.selection.strategy = SelectionStrategy::Random;
    cfg.selection.n_v = 1;
    const double random_mean = run_cells(cfg).at("cmba").mean_reward;
    cfg.selection.strategy = SelectionStrategy::LearnedPlusAlg1;
    const double combo_mean = run_cells(cfg).at("cmba").mean_reward;
    expect(combo_mean <= random_mean, "learned+alg1 mean " + fmtnum(combo_mean) +
                                          " > random mean " + fmtnum(random_mean));

    // greedy: the per-timestep objective equals the minimum of its sweep table
    const std::vector<DifferentiablePolicy> team(fx.env4.n_agents,
                                                 DifferentiablePolicy::scripted_expert());
    const FailureTarget target = velocity_target(fx.env4);
    SwarmEnv env(fx.env4);
    std::vector<double> obs = env.reset(1);
    SelectionConfig greedy;
    greedy.strategy = SelectionStrategy::Greedy;
    greedy.n_v = 1;
    const std::uint64_t episode_tag = splitmix64(1);
    std::size_t steps = 0;
    for (std::size_t t = 0; t < fx.env4.horizon; ++t) {
        const ConstraintSet c = constraints_at(fx.env4, obs, Norm::LInf, 0.1, {});
        AttackConfig acfg;
        acfg.steps = 30;
        acfg.seed = splitmix64(episode_tag ^ (t + 1));
        const SelectionResult sel =
            strategy_attack(greedy, fx.model4.net, team, c, target, acfg);
        expect(sel.sweep.size() == fx.env4.n_agents, "greedy swept an unexpected subset count");
        double best = sel.sweep.front().objective;
        for (const SubsetRecord& rec : sel.sweep) best = std::min(best, rec.objective);
        expect(sel.result.objective == best,
               "greedy objective differs from its sweep-table minimum at t=" +
                   std::to_string(t));
        // drive the episode under the greedy attack
        std::vector<double> a(fx.env4.action_dim());
        for (std::size_t i = 0; i < fx.env4.n_agents; ++i) {
            std::vector<double> po(obs.begin() + static_cast<long>(i * kObsPerAgent),
                                   obs.begin() + static_cast<long>((i + 1) * kObsPerAgent));
            for (std::size_t j = 0; j < kObsPerAgent; ++j)
                po[j] += sel.result.delta[i * kObsPerAgent + j];
            const auto ai = team[i].act(po);
            a[2 * i] = ai[0];
            a[2 * i + 1] = ai[1];
        }
        const StepResult sr = env.step(a);
        obs = sr.obs;
        ++steps;
        if (sr.done) break;
    }
    return "learned+alg1 mean " + fmtnum(combo_mean) + " <= random mean " +
           fmtnum(random_mean) + "; greedy sweep minimum exact over " +
           std::to_string(steps) + " timesteps";
}

std::string criterion_exp5(const Fixtures& fx) {
    ExperimentConfig cfg = benchmark_config(fx, fx.model4_path);
    cfg.methods = {AttackMethod::Cmba};
    cfg.budgets = {{Norm::LInf, 0.05}};
    cfg.selection.fixed_set = {0};
    cfg.selection.n_v = 1;
    const double one = run_cells(cfg).at("cmba").mean_reward;
    cfg.selection.fixed_set = {0, 1};
    cfg.selection.n_v = 2;
    const double two = run_cells(cfg).at("cmba").mean_reward;
    expect(two <= one, "two victims " + fmtnum(two) + " > one victim " + fmtnum(one));
    return "mean reward: one victim " + fmtnum(one) + ", two victims " + fmtnum(two);
}

std::string criterion_determinism(const Fixtures& fx) {
    ExperimentConfig cfg = benchmark_config(fx, fx.model4_path);
    cfg.methods = {AttackMethod::None, AttackMethod::Uniform, AttackMethod::Cmba};
    cfg.budgets = {{Norm::LInf, 0.05}, {Norm::LInf, 0.1}};
    cfg.episodes = 4;
    const RuntimeBundle rt = build_runtime(cfg);

    // repeated sweeps produce byte-identical csv and svg output
    const SweepResult r1 = sweep_budget(cfg, rt);
    const SweepResult r2 = sweep_budget(cfg, rt);
    const std::string d1 = fx.dir + "/det1", d2 = fx.dir + "/det2";
    std::filesystem::create_directories(d1);
    std::filesystem::create_directories(d2);
    write_episodes_csv(r1.episodes, d1 + "/episodes.csv");
    write_episodes_csv(r2.episodes, d2 + "/episodes.csv");
    emit_report(r1.cells, d1);
    emit_report(r2.cells, d2);
    for (const auto& entry : std::filesystem::directory_iterator(d1)) {
        const std::string name = entry.path().filename().string();
        const std::string a = testutil::read_file(d1 + "/" + name);
        const std::string b = testutil::read_file(d2 + "/" + name);
        expect(!a.empty() && a == b, "output file " + name + " differs between reruns");
    }

    // zero-budget episodes are bit-identical to no-attack episodes
    std::size_t compared = 0;
    for (std::uint64_t seed = cfg.base_seed; seed < cfg.base_seed + 4; ++seed) {
        const EpisodeRecord none =
            run_episode(cfg, rt, AttackMethod::None, {Norm::LInf, 0.0}, seed);
        for (AttackMethod m :
             {AttackMethod::Uniform, AttackMethod::Gaussian, AttackMethod::Cmba}) {
            const EpisodeRecord atk = run_episode(cfg, rt, m, {Norm::LInf, 0.0}, seed);
            expect(atk.rows.size() == none.rows.size(), "zero-budget episode length differs");
            expect(atk.total_reward == none.total_reward,
                   "zero-budget total reward differs");
            for (std::size_t t = 0; t < atk.rows.size(); ++t) {
                expect(atk.rows[t].obs == none.rows[t].obs, "zero-budget state differs");
                expect(atk.rows[t].action == none.rows[t].action,
                       "zero-budget action differs");
                for (double v : atk.rows[t].delta)
                    expect(v == 0.0, "zero-budget perturbation is not zero");
            }
            ++compared;
        }
    }
    return "rerun outputs byte-identical; " + std::to_string(compared) +
           " zero-budget episodes bit-identical to no-attack";
}

} // namespace

int main() {
    std::printf("building fixtures (datasets + dynamics models)...\n");
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    const Fixtures fx = build_fixtures();
    std::printf("fixtures ready in %.1fs: full mse %.3g (identity %.3g), degraded mse %.3g, "
                "2-agent mse %.3g\n\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                fx.model4.test_mse, fx.model4.identity_mse, fx.degraded4.test_mse,
                fx.model2.test_mse);
    std::fflush(stdout);

    criterion(1, "projection oracle equivalence", [&] { return criterion_projections(); });
    criterion(2, "gradient suite vs finite differences", [&] { return criterion_gradients(fx); });
    criterion(3, "one-step attack optimality vs grid search", [&] { return criterion_one_step(fx); });
    criterion(4, "linf benchmark: model-based beats noise baselines", [&] { return criterion_exp1(fx); });
    criterion(5, "l1 benchmark: model-based beats uniform", [&] { return criterion_exp2(fx); });
    criterion(6, "degraded dynamics model still attacks effectively", [&] { return criterion_exp3(fx); });
    criterion(7, "victim selection: learned beats random, greedy sweep exact", [&] { return criterion_exp4(fx); });
    criterion(8, "two victims never outperform one at the same budget", [&] { return criterion_exp5(fx); });
    criterion(9, "zero-budget neutrality and byte determinism", [&] { return criterion_determinism(fx); });

    if (g_failures > 0) {
        std::printf("\n%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("\nall criteria passed\n");
    return 0;
}
