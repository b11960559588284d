#include "cmba/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"

namespace cmba {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

const char* method_name(AttackMethod m) {
    switch (m) {
    case AttackMethod::None: return "none";
    case AttackMethod::Uniform: return "uniform";
    case AttackMethod::Gaussian: return "gaussian";
    case AttackMethod::Ifgsm: return "ifgsm";
    case AttackMethod::Cmba: return "cmba";
    }
    return "?";
}

AttackMethod method_from_name(const std::string& name) {
    if (name == "none") return AttackMethod::None;
    if (name == "uniform") return AttackMethod::Uniform;
    if (name == "gaussian") return AttackMethod::Gaussian;
    if (name == "ifgsm") return AttackMethod::Ifgsm;
    if (name == "cmba") return AttackMethod::Cmba;
    throw ConfigError("unknown attack method '" + name + "'");
}

const char* norm_name(Norm p) { return p == Norm::LInf ? "inf" : "1"; }

std::string victim_label(const SelectionConfig& s) {
    switch (s.strategy) {
    case SelectionStrategy::Fixed: {
        std::string out = "fixed{";
        for (std::size_t i = 0; i < s.fixed_set.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s.fixed_set[i]);
        }
        return out + "}";
    }
    case SelectionStrategy::Random: return "random" + std::to_string(s.n_v);
    case SelectionStrategy::Greedy: return "greedy" + std::to_string(s.n_v);
    case SelectionStrategy::Learned: return "learned" + std::to_string(s.n_v);
    case SelectionStrategy::LearnedPlusAlg1: return "learned+alg1_" + std::to_string(s.n_v);
    }
    return "?";
}

void ExperimentConfig::validate() const {
    env.validate();
    if (policy_source != "scripted" && policy_source != "cloned")
        throw ConfigError("policy source must be 'scripted' or 'cloned'");
    if (policy_source == "cloned" && policy_path.empty())
        throw ConfigError("cloned policy source requires a policy path");
    if (methods.empty()) throw ConfigError("at least one attack method required");
    const bool only_none =
        methods.size() == 1 && methods.front() == AttackMethod::None;
    if (budgets.empty() && !only_none)
        throw ConfigError("budget grid must be nonempty unless the only method is 'none'");
    for (const Budget& b : budgets)
        if (b.epsilon < 0.0) throw ConfigError("budget epsilon must be nonnegative");
    if (episodes == 0) throw ConfigError("episodes must be positive");
    if (selection.n_v < 1 || selection.n_v > env.n_agents)
        throw ConfigError("selection n_v must be in [1, n_agents]");
    for (AttackMethod m : methods) {
        if (m == AttackMethod::Cmba) continue;
        if (m == AttackMethod::None) continue;
        if (selection.strategy != SelectionStrategy::Fixed &&
            selection.strategy != SelectionStrategy::Random)
            throw ConfigError("method '" + std::string(method_name(m)) +
                              "' supports only fixed or random victim selection");
    }
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
    }
}

SelectionStrategy strategy_from_name(const std::string& s) {
    if (s == "fixed") return SelectionStrategy::Fixed;
    if (s == "random") return SelectionStrategy::Random;
    if (s == "greedy") return SelectionStrategy::Greedy;
    if (s == "learned") return SelectionStrategy::Learned;
    if (s == "learned_plus_alg1") return SelectionStrategy::LearnedPlusAlg1;
    throw ConfigError("config: unknown selection strategy '" + s + "'");
}

Norm norm_from_name(const std::string& s) {
    if (s == "inf") return Norm::LInf;
    if (s == "1" || s == "l1") return Norm::L1;
    throw ConfigError("config: unknown norm '" + s + "' (use \"inf\" or \"1\")");
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw ParseError("config file " + path + ": " + e.what());
    }
    if (!root.is_object()) throw ParseError("config file " + path + ": expected a JSON object");
    reject_unknown(root,
                   {"version", "env", "policy", "dynamics_model", "methods", "selection",
                    "budgets", "attack", "episodes", "base_seed", "output_dir"},
                   "top level");
    if (!root.contains("version") || !root["version"].is_number_integer() ||
        root["version"].get<int>() != 1)
        throw ConfigError("config: 'version' must be present and equal to 1");

    ExperimentConfig cfg;
    if (root.contains("env")) {
        const json& e = root["env"];
        reject_unknown(e,
                       {"n_agents", "dt", "damping", "arena_half_width", "v_max", "horizon",
                        "discount"},
                       "env");
        if (e.contains("n_agents")) cfg.env.n_agents = e["n_agents"].get<std::size_t>();
        if (e.contains("dt")) cfg.env.dt = e["dt"].get<double>();
        if (e.contains("damping")) cfg.env.damping = e["damping"].get<double>();
        if (e.contains("arena_half_width"))
            cfg.env.arena_half_width = e["arena_half_width"].get<double>();
        if (e.contains("v_max")) cfg.env.v_max = e["v_max"].get<double>();
        if (e.contains("horizon")) cfg.env.horizon = e["horizon"].get<std::size_t>();
        if (e.contains("discount")) cfg.env.discount = e["discount"].get<double>();
    }
    if (root.contains("policy")) {
        const json& p = root["policy"];
        reject_unknown(p, {"source", "model_path", "k_p", "k_d"}, "policy");
        if (p.contains("source")) cfg.policy_source = p["source"].get<std::string>();
        if (p.contains("model_path")) cfg.policy_path = p["model_path"].get<std::string>();
        if (p.contains("k_p")) cfg.expert_kp = p["k_p"].get<double>();
        if (p.contains("k_d")) cfg.expert_kd = p["k_d"].get<double>();
    }
    if (root.contains("dynamics_model"))
        cfg.dynamics_model_path = root["dynamics_model"].get<std::string>();
    if (root.contains("methods")) {
        cfg.methods.clear();
        for (const json& m : root["methods"])
            cfg.methods.push_back(method_from_name(m.get<std::string>()));
    }
    if (root.contains("selection")) {
        const json& s = root["selection"];
        reject_unknown(s, {"strategy", "n_v", "fixed_set", "warm_start", "selector_hidden"},
                       "selection");
        if (s.contains("strategy"))
            cfg.selection.strategy = strategy_from_name(s["strategy"].get<std::string>());
        if (s.contains("n_v")) cfg.selection.n_v = s["n_v"].get<std::size_t>();
        if (s.contains("fixed_set")) {
            cfg.selection.fixed_set.clear();
            for (const json& v : s["fixed_set"])
                cfg.selection.fixed_set.push_back(v.get<std::size_t>());
        }
        if (s.contains("warm_start")) cfg.selection.warm_start = s["warm_start"].get<bool>();
        if (s.contains("selector_hidden")) {
            cfg.selection.selector_hidden.clear();
            for (const json& v : s["selector_hidden"])
                cfg.selection.selector_hidden.push_back(v.get<std::size_t>());
        }
    }
    if (root.contains("budgets")) {
        cfg.budgets.clear();
        for (const json& b : root["budgets"]) {
            reject_unknown(b, {"p", "epsilon"}, "budgets entry");
            Budget budget;
            if (b.contains("p")) budget.p = norm_from_name(b["p"].get<std::string>());
            if (!b.contains("epsilon")) throw ConfigError("config: budget entry needs 'epsilon'");
            budget.epsilon = b["epsilon"].get<double>();
            cfg.budgets.push_back(budget);
        }
    }
    if (root.contains("attack")) {
        const json& a = root["attack"];
        reject_unknown(a, {"steps", "step_size", "selector_step"}, "attack");
        if (a.contains("steps")) cfg.attack.steps = a["steps"].get<int>();
        if (a.contains("step_size")) cfg.attack.step_size = a["step_size"].get<double>();
        if (a.contains("selector_step"))
            cfg.attack.selector_step = a["selector_step"].get<double>();
    }
    if (root.contains("episodes")) cfg.episodes = root["episodes"].get<std::size_t>();
    if (root.contains("base_seed")) cfg.base_seed = root["base_seed"].get<std::uint64_t>();
    if (root.contains("output_dir")) cfg.output_dir = root["output_dir"].get<std::string>();

    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Episode runner
// ---------------------------------------------------------------------------

RuntimeBundle build_runtime(const ExperimentConfig& cfg) {
    cfg.validate();
    RuntimeBundle rt;
    rt.anti_expert = DifferentiablePolicy::scripted_anti_expert(cfg.expert_kp, cfg.expert_kd);
    if (cfg.policy_source == "cloned") {
        DenseNet net = load_net(cfg.policy_path); // one per-agent net shared by all agents
        for (std::size_t i = 0; i < cfg.env.n_agents; ++i)
            rt.policies.push_back(DifferentiablePolicy::from_net(net));
    } else {
        for (std::size_t i = 0; i < cfg.env.n_agents; ++i)
            rt.policies.push_back(
                DifferentiablePolicy::scripted_expert(cfg.expert_kp, cfg.expert_kd));
    }

    const bool needs_model = std::find(cfg.methods.begin(), cfg.methods.end(),
                                       AttackMethod::Cmba) != cfg.methods.end();
    if (needs_model) {
        if (cfg.dynamics_model_path.empty())
            throw ConfigError("cmba attack requires a dynamics model path");
        DenseNet net = load_net(cfg.dynamics_model_path);
        if (net.input_size() != cfg.env.obs_dim() + cfg.env.action_dim() ||
            net.output_size() != cfg.env.obs_dim())
            throw ShapeError("dynamics model dimensions do not match the environment");
        rt.dynamics = std::move(net);
    }

    // Failure target: drive every velocity coordinate to zero; only those
    // coordinates enter the distance.
    rt.target.values.assign(cfg.env.obs_dim(), 0.0);
    rt.target.mask.assign(cfg.env.obs_dim(), 0);
    for (std::size_t i = 0; i < cfg.env.n_agents; ++i) {
        rt.target.mask[i * kObsPerAgent + 2] = 1;
        rt.target.mask[i * kObsPerAgent + 3] = 1;
    }

    auto bounds = observation_bounds(cfg.env);
    rt.obs_lower = std::move(bounds.first);
    rt.obs_upper = std::move(bounds.second);
    return rt;
}

namespace {

std::vector<std::size_t> sample_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
    Rng rng(splitmix64(seed ^ 0x72616e64ull));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<long>(k));
    std::sort(out.begin(), out.end());
    return out;
}

// Victim set for the model-free methods; the cmba strategies resolve their
// own victims.
std::vector<std::size_t> baseline_victims(const SelectionConfig& sel, std::size_t n,
                                          std::uint64_t attack_seed) {
    if (sel.strategy == SelectionStrategy::Fixed) {
        std::vector<std::size_t> v = sel.fixed_set;
        std::sort(v.begin(), v.end());
        return v;
    }
    return sample_subset(n, sel.n_v, attack_seed);
}

} // namespace

EpisodeRecord run_episode(const ExperimentConfig& cfg, const RuntimeBundle& rt,
                          AttackMethod method, const Budget& budget, std::uint64_t seed) {
    if (method == AttackMethod::Cmba && !rt.dynamics)
        throw ConfigError("run_episode: cmba method requires a loaded dynamics model");

    SwarmEnv env(cfg.env);
    std::vector<double> obs = env.reset(seed);

    SelectorNetwork selector;
    if (method == AttackMethod::Cmba &&
        (cfg.selection.strategy == SelectionStrategy::Learned ||
         cfg.selection.strategy == SelectionStrategy::LearnedPlusAlg1) &&
        cfg.selection.warm_start)
        selector = make_selector(cfg.env.n_agents, cfg.selection.selector_hidden,
                                 splitmix64(seed ^ 0x73656c30ull));

    EpisodeRecord record;
    record.seed = seed;
    record.rows.reserve(cfg.env.horizon);

    std::vector<double> joint_action(cfg.env.action_dim(), 0.0);
    const std::uint64_t episode_tag = splitmix64(seed);
    for (std::size_t t = 0; t < cfg.env.horizon; ++t) {
        const std::uint64_t attack_seed = splitmix64(episode_tag ^ (t + 1));

        ConstraintSet c;
        c.base_obs = obs;
        c.lower = rt.obs_lower;
        c.upper = rt.obs_upper;
        c.budget = budget;
        c.block_size = kObsPerAgent;

        TimestepRow row;
        row.obs = obs;
        row.objective = kNaN;
        row.delta.assign(cfg.env.obs_dim(), 0.0);

        AttackConfig acfg = cfg.attack;
        acfg.seed = attack_seed;
        switch (method) {
        case AttackMethod::None:
            break;
        case AttackMethod::Uniform: {
            c.victims = baseline_victims(cfg.selection, cfg.env.n_agents, attack_seed);
            row.delta = uniform_attack(c, attack_seed).delta;
            break;
        }
        case AttackMethod::Gaussian: {
            c.victims = baseline_victims(cfg.selection, cfg.env.n_agents, attack_seed);
            row.delta = gaussian_attack(c, attack_seed).delta;
            break;
        }
        case AttackMethod::Ifgsm: {
            c.victims = baseline_victims(cfg.selection, cfg.env.n_agents, attack_seed);
            AttackResult r = ifgsm_attack(rt.policies, rt.anti_expert, c, acfg);
            row.delta = std::move(r.delta);
            row.objective = r.objective;
            break;
        }
        case AttackMethod::Cmba: {
            SelectionResult r =
                strategy_attack(cfg.selection, *rt.dynamics, rt.policies, c, rt.target, acfg,
                                cfg.selection.warm_start ? &selector : nullptr);
            row.delta = std::move(r.result.delta);
            row.objective = r.result.objective;
            break;
        }
        }

        for (std::size_t i = 0; i < cfg.env.n_agents; ++i) {
            const std::size_t off = i * kObsPerAgent;
            std::array<double, 2> a{};
            bool perturbed = false;
            for (std::size_t j = 0; j < kObsPerAgent; ++j)
                if (row.delta[off + j] != 0.0) perturbed = true;
            if (perturbed) {
                std::vector<double> po(obs.begin() + static_cast<long>(off),
                                       obs.begin() + static_cast<long>(off + kObsPerAgent));
                for (std::size_t j = 0; j < kObsPerAgent; ++j) po[j] += row.delta[off + j];
                a = rt.policies[i].act(po);
            } else {
                a = rt.policies[i].act({obs.data() + off, kObsPerAgent});
            }
            joint_action[2 * i] = a[0];
            joint_action[2 * i + 1] = a[1];
        }

        StepResult res = env.step(joint_action);
        row.action = joint_action;
        row.reward = res.reward;
        record.rows.push_back(std::move(row));
        record.total_reward += res.reward;
        obs = res.obs;
        if (res.done) break;
    }
    record.length = record.rows.size();
    return record;
}

SweepResult sweep_budget(const ExperimentConfig& cfg, const RuntimeBundle& rt) {
    SweepResult out;
    const std::string victim = victim_label(cfg.selection);
    for (AttackMethod method : cfg.methods) {
        for (const Budget& budget : cfg.budgets) {
            CellResult cell;
            cell.method = method_name(method);
            cell.norm = norm_name(budget.p);
            cell.epsilon = budget.epsilon;
            cell.victim = victim;
            cell.n_v = cfg.selection.n_v;
            cell.episodes = cfg.episodes;
            try {
                double sum = 0.0, sum_sq = 0.0, len = 0.0;
                for (std::size_t k = 0; k < cfg.episodes; ++k) {
                    const std::uint64_t seed = cfg.base_seed + k;
                    EpisodeRecord rec = run_episode(cfg, rt, method, budget, seed);
                    sum += rec.total_reward;
                    sum_sq += rec.total_reward * rec.total_reward;
                    len += static_cast<double>(rec.length);
                    out.episodes.push_back({cell.method, cell.norm, cell.epsilon, victim, seed,
                                            rec.length, rec.total_reward});
                }
                const double n = static_cast<double>(cfg.episodes);
                cell.mean_reward = sum / n;
                const double var = std::max(0.0, sum_sq / n - cell.mean_reward * cell.mean_reward);
                cell.std_reward = std::sqrt(var);
                cell.mean_length = len / n;
            } catch (const std::exception& e) {
                std::string reason = e.what();
                std::replace(reason.begin(), reason.end(), ',', ';');
                std::replace(reason.begin(), reason.end(), '\n', ' ');
                cell.status = "failed: " + reason;
                cell.mean_reward = kNaN;
                cell.std_reward = kNaN;
                cell.mean_length = kNaN;
            }
            out.cells.push_back(std::move(cell));
        }
    }
    // aggregation is order-independent: sort before anything is written
    std::stable_sort(out.episodes.begin(), out.episodes.end(),
                     [](const EpisodeSummary& a, const EpisodeSummary& b) {
                         if (a.method != b.method) return a.method < b.method;
                         if (a.norm != b.norm) return a.norm < b.norm;
                         if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
                         return a.seed < b.seed;
                     });
    return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace {

const char* kCoordNames[kObsPerAgent] = {"px", "py", "vx", "vy", "gx", "gy", "mx", "my"};

void write_wide_csv(const std::string& path, const EnvSpec& spec,
                    const std::vector<TimestepRow>& rows, bool perturbations) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    std::string header = "t";
    for (std::size_t i = 0; i < spec.n_agents; ++i)
        for (std::size_t j = 0; j < kObsPerAgent; ++j)
            header += ",a" + std::to_string(i) + "_" + kCoordNames[j];
    out << header << "\n";
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::string line = std::to_string(t);
        const std::vector<double>& v = perturbations ? rows[t].delta : rows[t].obs;
        for (double x : v) line += "," + fmt17(x);
        out << line << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace

void emit_traces(const EpisodeRecord& record, const EnvSpec& spec, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_wide_csv(dir + "/states.csv", spec, record.rows, false);
    write_wide_csv(dir + "/perturbations.csv", spec, record.rows, true);
}

void write_cells_csv(const std::vector<CellResult>& cells, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "method,p,epsilon,victim,n_v,episodes,mean_reward,std_reward,mean_length,status\n";
    for (const CellResult& c : cells) {
        out << c.method << "," << c.norm << "," << fmt17(c.epsilon) << "," << c.victim << ","
            << c.n_v << "," << c.episodes << "," << fmt17(c.mean_reward) << ","
            << fmt17(c.std_reward) << "," << fmt17(c.mean_length) << "," << c.status << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

void write_episodes_csv(const std::vector<EpisodeSummary>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "method,p,epsilon,victim,seed,length,total_reward\n";
    for (const EpisodeSummary& r : rows) {
        out << r.method << "," << r.norm << "," << fmt17(r.epsilon) << "," << r.victim << ","
            << r.seed << "," << r.length << "," << fmt17(r.total_reward) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

std::vector<CellResult> load_cells_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header");
    if (line != "method,p,epsilon,victim,n_v,episodes,mean_reward,std_reward,mean_length,status")
        throw ParseError(path + ": unexpected header '" + line + "'");
    std::vector<CellResult> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 10)
            throw ParseError(path + ": line " + std::to_string(lineno) +
                             ": expected 10 fields, got " + std::to_string(fields.size()));
        CellResult c;
        c.method = fields[0];
        c.norm = fields[1];
        c.epsilon = std::stod(fields[2]);
        c.victim = fields[3];
        c.n_v = static_cast<std::size_t>(std::stoul(fields[4]));
        c.episodes = static_cast<std::size_t>(std::stoul(fields[5]));
        c.mean_reward = std::stod(fields[6]);
        c.std_reward = std::stod(fields[7]);
        c.mean_length = std::stod(fields[8]);
        c.status = fields[9];
        cells.push_back(std::move(c));
    }
    return cells;
}

} // namespace cmba
