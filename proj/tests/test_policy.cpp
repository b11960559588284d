#include "doctest.h"

#include <cmath>

#include "cmba/dynlearn.hpp"
#include "cmba/errors.hpp"
#include "cmba/policy.hpp"
#include "cmba/rng.hpp"
#include "cmba/swarmsim.hpp"
#include "testutil.hpp"

using namespace cmba;

namespace {

std::vector<double> random_obs(Rng& rng) {
    std::vector<double> o(kObsPerAgent);
    o[0] = uniform(rng, -10.0, 10.0);
    o[1] = uniform(rng, -10.0, 10.0);
    o[2] = uniform(rng, -2.0, 2.0);
    o[3] = uniform(rng, -2.0, 2.0);
    for (std::size_t j = 4; j < 8; ++j) o[j] = uniform(rng, -5.0, 5.0);
    return o;
}

} // namespace

TEST_CASE("expert: zero action at the goal with zero velocity") {
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert();
    std::vector<double> obs(kObsPerAgent, 0.0);
    obs[0] = 3.0; // position does not matter
    const auto a = expert.act(obs);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 0.0);
}

TEST_CASE("expert: action follows tanh(k_p * goal_offset - k_d * velocity)") {
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert(1.0, 0.5);
    std::vector<double> obs(kObsPerAgent, 0.0);
    obs[4] = 1.0;
    const auto a = expert.act(obs);
    CHECK(a[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));
    CHECK(a[1] == 0.0);

    obs[2] = 0.8; // velocity damping term
    const auto a2 = expert.act(obs);
    CHECK(a2[0] == doctest::Approx(std::tanh(1.0 - 0.5 * 0.8)).epsilon(1e-15));
}

TEST_CASE("anti-expert negates the expert's pre-activation") {
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert();
    const DifferentiablePolicy anti = DifferentiablePolicy::scripted_anti_expert();
    Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> obs = random_obs(rng);
        const auto ae = expert.act(obs);
        const auto aa = anti.act(obs);
        CHECK(aa[0] == doctest::Approx(-ae[0]).epsilon(1e-14));
        CHECK(aa[1] == doctest::Approx(-ae[1]).epsilon(1e-14));
    }
}

TEST_CASE("actions stay inside [-1, 1] for extreme observations") {
    Rng rng(13);
    DenseNet net = make_dense_net({8, 16, 2}, Activation::Tanh, Activation::Tanh, 14);
    const DifferentiablePolicy dense = DifferentiablePolicy::from_net(net);
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert();
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> obs(kObsPerAgent);
        for (double& v : obs) v = uniform(rng, -50.0, 50.0);
        for (const DifferentiablePolicy* p : {&dense, &expert}) {
            const auto a = p->act(obs);
            CHECK(std::abs(a[0]) <= 1.0);
            CHECK(std::abs(a[1]) <= 1.0);
        }
    }
}

TEST_CASE("expert jacobian: closed-form entries") {
    const double kp = 1.3, kd = 0.4;
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert(kp, kd);
    Rng rng(15);
    const std::vector<double> obs = random_obs(rng);
    const Matrix jac = expert.act_jacobian(obs);
    const double u = kp * obs[4] - kd * obs[2];
    const double sech2 = 1.0 - std::tanh(u) * std::tanh(u);
    CHECK(jac(0, 4) == doctest::Approx(kp * sech2).epsilon(1e-14));
    CHECK(jac(0, 2) == doctest::Approx(-kd * sech2).epsilon(1e-14));
    CHECK(jac(0, 0) == 0.0);
    CHECK(jac(0, 6) == 0.0);
    CHECK(jac(1, 4) == 0.0);
}

TEST_CASE("jacobians match finite differences for all policy kinds") {
    Rng rng(17);
    std::vector<DifferentiablePolicy> policies;
    policies.push_back(DifferentiablePolicy::scripted_expert());
    policies.push_back(DifferentiablePolicy::scripted_anti_expert(0.7, 0.9));
    policies.push_back(DifferentiablePolicy::from_net(
        make_dense_net({8, 12, 12, 2}, Activation::Tanh, Activation::Tanh, 18)));

    for (const DifferentiablePolicy& p : policies) {
        for (int rep = 0; rep < 10; ++rep) {
            const std::vector<double> obs = random_obs(rng);
            const Matrix jac = p.act_jacobian(obs);
            for (std::size_t r = 0; r < 2; ++r) {
                const auto f = [&](std::span<const double> o) { return p.act(o)[r]; };
                const std::vector<double> fd = testutil::central_diff(f, obs);
                CHECK(testutil::rel_err(fd, jac.row(r)) <= 1e-4);
            }
        }
    }
}

TEST_CASE("dense policy with zero weights has a zero jacobian") {
    DenseNet net = make_dense_net({8, 6, 2}, Activation::Tanh, Activation::Identity, 19);
    for (Matrix& w : net.weights) w.fill(0.0);
    const DifferentiablePolicy p = DifferentiablePolicy::from_net(net);
    Rng rng(20);
    const Matrix jac = p.act_jacobian(random_obs(rng));
    for (double v : jac.data) CHECK(v == 0.0);
}

TEST_CASE("expert closes the distance to the goal monotonically while approaching") {
    EnvSpec spec;
    spec.n_agents = 1;
    spec.damping = 0.0;
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert();
    SwarmEnv env(spec);
    env.reset(1);
    env.restore({0.0, 0.0}, {0.0, 0.0}, {3.0, 0.0}, 0);
    std::vector<double> obs = env.observation();
    double dist = 3.0;
    while (dist > 0.5) {
        const auto a = expert.act(obs);
        const StepResult res = env.step(std::vector<double>{a[0], a[1]});
        const double next_dist = std::hypot(res.obs[4], res.obs[5]);
        CHECK(next_dist < dist);
        dist = next_dist;
        obs = res.obs;
        REQUIRE_FALSE(res.done);
    }
}

TEST_CASE("behavior cloning reaches low holdout error and near-teacher reward") {
    EnvSpec spec;
    const DifferentiablePolicy teacher = DifferentiablePolicy::scripted_expert();
    std::vector<DifferentiablePolicy> team(spec.n_agents, teacher);
    const TransitionDataset data =
        collect_transitions(spec, team, DataSource::Mixed, 12500, 400);

    Matrix states(data.transitions.size() * spec.n_agents, kObsPerAgent);
    std::size_t r = 0;
    for (const Transition& t : data.transitions)
        for (std::size_t i = 0; i < spec.n_agents; ++i, ++r)
            std::copy_n(t.obs.begin() + static_cast<long>(i * kObsPerAgent), kObsPerAgent,
                        states.row(r).begin());

    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.batch_size = 256;
    cfg.lr_grid = {1e-3};
    cfg.seed = 401;
    const CloneResult clone = behavior_clone(teacher, states, cfg);
    CHECK(clone.holdout_mse <= 1e-3);

    const auto rollout = [&](const DifferentiablePolicy& p, std::uint64_t seed) {
        SwarmEnv env(spec);
        std::vector<double> obs = env.reset(seed);
        std::vector<double> a(spec.action_dim());
        double total = 0.0;
        for (std::size_t t = 0; t < spec.horizon; ++t) {
            for (std::size_t i = 0; i < spec.n_agents; ++i) {
                const auto ai = p.act({obs.data() + i * kObsPerAgent, kObsPerAgent});
                a[2 * i] = ai[0];
                a[2 * i + 1] = ai[1];
            }
            const StepResult res = env.step(a);
            total += res.reward;
            if (res.done) break;
            obs = res.obs;
        }
        return total;
    };
    double teacher_mean = 0.0, clone_mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
        teacher_mean += rollout(teacher, seed) / 16.0;
        clone_mean += rollout(clone.policy, seed) / 16.0;
    }
    CHECK(clone_mean >= 0.8 * teacher_mean);
}

TEST_CASE("behavior cloning with zero epochs keeps the seeded initialization") {
    Rng rng(21);
    Matrix states(50, kObsPerAgent);
    for (double& v : states.data) v = uniform(rng, -2.0, 2.0);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 22;
    const CloneResult clone =
        behavior_clone(DifferentiablePolicy::scripted_expert(), states, cfg);
    const DenseNet reference = make_dense_net({kObsPerAgent, 64, 64, kActionPerAgent},
                                              Activation::Tanh, Activation::Tanh, 22);
    for (std::size_t l = 0; l < reference.layer_count(); ++l) {
        CHECK(clone.policy.net().weights[l].data == reference.weights[l].data);
        CHECK(clone.policy.net().biases[l] == reference.biases[l]);
    }
}

TEST_CASE("policy error paths") {
    const DifferentiablePolicy expert = DifferentiablePolicy::scripted_expert();
    CHECK_THROWS_AS(expert.act(std::vector<double>{1.0, 2.0}), ShapeError);
    CHECK_THROWS_AS(
        DifferentiablePolicy::from_net(make_dense_net({4, 2}, Activation::Tanh,
                                                      Activation::Tanh, 1)),
        ShapeError);
    Matrix empty;
    TrainConfig cfg;
    CHECK_THROWS_AS(behavior_clone(expert, empty, cfg), ConfigError);
}
