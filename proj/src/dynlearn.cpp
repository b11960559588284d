#include "cmba/dynlearn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"

namespace cmba {

namespace {

TransitionDataset collect_single_source(const EnvSpec& spec,
                                        const std::vector<DifferentiablePolicy>& policies,
                                        DataSource source, std::size_t n_samples,
                                        std::uint64_t seed) {
    if (source == DataSource::TrainedPolicy && policies.size() != spec.n_agents)
        throw ConfigError("collect_transitions: one policy per agent required");

    TransitionDataset data;
    data.source = source;
    data.transitions.reserve(n_samples);

    Rng action_rng(splitmix64(seed ^ 0x616374696f6e73ull));
    std::uint64_t episode_seed = seed;
    SwarmEnv env(spec);
    std::vector<double> obs = env.reset(episode_seed++);
    std::vector<double> action(spec.action_dim(), 0.0);

    while (data.transitions.size() < n_samples) {
        for (std::size_t i = 0; i < spec.n_agents; ++i) {
            if (source == DataSource::TrainedPolicy) {
                const auto a =
                    policies[i].act({obs.data() + kObsPerAgent * i, kObsPerAgent});
                action[2 * i] = a[0];
                action[2 * i + 1] = a[1];
            } else {
                action[2 * i] = uniform(action_rng, -1.0, 1.0);
                action[2 * i + 1] = uniform(action_rng, -1.0, 1.0);
            }
        }
        StepResult res = env.step(action);
        Transition t;
        t.obs = obs;
        t.action = action;
        t.next_obs = res.obs;
        t.reward = res.reward;
        t.done = res.done;
        data.transitions.push_back(std::move(t));
        obs = res.done ? env.reset(episode_seed++) : res.obs;
    }
    if (source == DataSource::TrainedPolicy)
        data.n_trained = data.transitions.size();
    else
        data.n_random = data.transitions.size();
    return data;
}

} // namespace

TransitionDataset collect_transitions(const EnvSpec& spec,
                                      const std::vector<DifferentiablePolicy>& policies,
                                      DataSource source, std::size_t n_samples,
                                      std::uint64_t seed, double mix_ratio) {
    spec.validate();
    if (n_samples == 0) throw ConfigError("collect_transitions: n_samples must be positive");
    if (source != DataSource::Mixed)
        return collect_single_source(spec, policies, source, n_samples, seed);

    if (mix_ratio < 0.0 || mix_ratio > 1.0)
        throw ConfigError("collect_transitions: mix_ratio must be in [0, 1]");
    const std::size_t n_tr =
        static_cast<std::size_t>(std::llround(mix_ratio * static_cast<double>(n_samples)));
    TransitionDataset data;
    data.source = DataSource::Mixed;
    if (n_tr > 0) {
        TransitionDataset tr = collect_single_source(
            spec, policies, DataSource::TrainedPolicy, n_tr, splitmix64(seed ^ 0x7472ull));
        data.transitions = std::move(tr.transitions);
        data.n_trained = n_tr;
    }
    if (n_tr < n_samples) {
        TransitionDataset rd =
            collect_single_source(spec, policies, DataSource::RandomPolicy, n_samples - n_tr,
                                  splitmix64(seed ^ 0x7264ull));
        data.n_random = rd.transitions.size();
        data.transitions.insert(data.transitions.end(),
                                std::make_move_iterator(rd.transitions.begin()),
                                std::make_move_iterator(rd.transitions.end()));
    }
    return data;
}

DynamicsModel train_dynamics(const TransitionDataset& data, const TrainConfig& cfg,
                             const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    std::vector<const Transition*> usable;
    usable.reserve(data.transitions.size());
    for (const Transition& t : data.transitions)
        if (!t.done) usable.push_back(&t);
    if (usable.empty())
        throw ConfigError("train_dynamics: no non-terminal transitions to train on");

    const std::size_t obs_dim = usable.front()->obs.size();
    const std::size_t act_dim = usable.front()->action.size();
    const std::size_t in_dim = obs_dim + act_dim;

    std::vector<std::size_t> idx(usable.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(splitmix64(seed ^ 0x74657374ull));
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng() % i)]);

    const std::size_t test_count =
        usable.size() >= 2 ? std::max<std::size_t>(1, usable.size() / 10) : 0;
    const std::size_t train_count = usable.size() - test_count;
    if (train_count == 0) throw ConfigError("train_dynamics: dataset too small to split");

    Matrix x(train_count, in_dim), y(train_count, obs_dim);
    for (std::size_t r = 0; r < train_count; ++r) {
        const Transition& t = *usable[idx[r]];
        std::copy(t.obs.begin(), t.obs.end(), x.row(r).begin());
        std::copy(t.action.begin(), t.action.end(), x.row(r).begin() + obs_dim);
        for (std::size_t j = 0; j < obs_dim; ++j) y(r, j) = t.next_obs[j] - t.obs[j];
    }

    std::vector<std::size_t> sizes;
    sizes.push_back(in_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(obs_dim);
    DenseNet net = make_dense_net(sizes, Activation::Tanh, Activation::Identity,
                                  splitmix64(seed ^ 0x696e6974ull));
    FitResult fit = fit_regression(net, x, y, cfg);

    TransitionDataset test;
    test.source = data.source;
    for (std::size_t r = train_count; r < usable.size(); ++r)
        test.transitions.push_back(*usable[idx[r]]);

    DynamicsModel model;
    model.net = std::move(fit.net);
    model.sample_count = usable.size();
    model.epochs = cfg.epochs;
    model.chosen_lr = fit.chosen_lr;
    if (!test.transitions.empty()) {
        model.test_mse = eval_mse(model.net, test);
        double identity = 0.0;
        for (const Transition& t : test.transitions) {
            for (std::size_t j = 0; j < obs_dim; ++j) {
                const double d = t.next_obs[j] - t.obs[j];
                identity += d * d;
            }
        }
        model.identity_mse = identity / static_cast<double>(test.transitions.size());
    } else {
        model.test_mse = fit.holdout_mse;
        model.identity_mse = 0.0;
    }
    return model;
}

std::vector<double> predict_next(const DenseNet& net, std::span<const double> obs,
                                 std::span<const double> action) {
    if (net.input_size() != obs.size() + action.size() || net.output_size() != obs.size())
        throw ShapeError("predict_next: model dimensions do not match");
    std::vector<double> input(obs.size() + action.size());
    std::copy(obs.begin(), obs.end(), input.begin());
    std::copy(action.begin(), action.end(), input.begin() + static_cast<long>(obs.size()));
    std::vector<double> out = forward(net, input);
    for (std::size_t j = 0; j < obs.size(); ++j) out[j] += obs[j];
    return out;
}

double eval_mse(const DenseNet& net, const TransitionDataset& test) {
    if (test.transitions.empty()) throw ConfigError("eval_mse: empty test set");
    const std::size_t obs_dim = test.transitions.front().obs.size();
    const std::size_t act_dim = test.transitions.front().action.size();
    if (net.input_size() != obs_dim + act_dim || net.output_size() != obs_dim)
        throw ShapeError("eval_mse: model dimensions do not match the dataset");

    double total = 0.0;
    for (const Transition& t : test.transitions) {
        if (t.obs.size() != obs_dim || t.action.size() != act_dim || t.next_obs.size() != obs_dim)
            throw ShapeError("eval_mse: inconsistent transition dimensions");
        const std::vector<double> pred = predict_next(net, t.obs, t.action);
        for (std::size_t j = 0; j < obs_dim; ++j) {
            const double d = pred[j] - t.next_obs[j];
            total += d * d;
        }
    }
    return total / static_cast<double>(test.transitions.size());
}

namespace {

void append_fields(std::string& line, std::span<const double> v) {
    char buf[48];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, ",%.17g", x);
        line += buf;
    }
}

} // namespace

void save_dataset_csv(const TransitionDataset& data, const std::string& path) {
    if (data.transitions.empty()) throw ConfigError("save_dataset_csv: empty dataset");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");

    const std::size_t obs_dim = data.transitions.front().obs.size();
    const std::size_t act_dim = data.transitions.front().action.size();
    std::string header = "source";
    for (std::size_t j = 0; j < obs_dim; ++j) header += ",s" + std::to_string(j);
    for (std::size_t j = 0; j < act_dim; ++j) header += ",a" + std::to_string(j);
    for (std::size_t j = 0; j < obs_dim; ++j) header += ",sp" + std::to_string(j);
    header += ",reward,done";
    out << header << "\n";

    const char* source = data.source == DataSource::TrainedPolicy  ? "trained_policy"
                         : data.source == DataSource::RandomPolicy ? "random_policy"
                                                                   : "mixed";
    for (const Transition& t : data.transitions) {
        std::string line = source;
        append_fields(line, t.obs);
        append_fields(line, t.action);
        append_fields(line, t.next_obs);
        char buf[48];
        std::snprintf(buf, sizeof buf, ",%.17g,%d", t.reward, t.done ? 1 : 0);
        line += buf;
        out << line << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

TransitionDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path + ": missing header row");

    std::size_t obs_dim = 0, act_dim = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.size() > 1 && col[0] == 's' && col[1] != 'p' && std::isdigit(col[1]))
                ++obs_dim;
            else if (col.size() > 1 && col[0] == 'a' && std::isdigit(col[1]))
                ++act_dim;
        }
        if (obs_dim == 0 || act_dim == 0)
            throw ParseError(path + ": header lacks observation/action columns");
    }

    TransitionDataset data;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        const std::size_t want = 1 + 2 * obs_dim + act_dim + 2;
        if (fields.size() != want)
            throw ParseError(path + ": line " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(want));
        Transition t;
        std::size_t k = 1;
        const auto num = [&](const std::string& s) {
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw ParseError(path + ": line " + std::to_string(lineno) +
                                 ": bad number '" + s + "'");
            }
        };
        if (fields[0] == "trained_policy")
            data.source = DataSource::TrainedPolicy;
        else if (fields[0] == "random_policy")
            data.source = DataSource::RandomPolicy;
        else if (fields[0] == "mixed")
            data.source = DataSource::Mixed;
        else
            throw ParseError(path + ": line " + std::to_string(lineno) + ": unknown source '" +
                             fields[0] + "'");
        for (std::size_t j = 0; j < obs_dim; ++j) t.obs.push_back(num(fields[k++]));
        for (std::size_t j = 0; j < act_dim; ++j) t.action.push_back(num(fields[k++]));
        for (std::size_t j = 0; j < obs_dim; ++j) t.next_obs.push_back(num(fields[k++]));
        t.reward = num(fields[k++]);
        t.done = fields[k] == "1";
        data.transitions.push_back(std::move(t));
    }
    return data;
}

} // namespace cmba
