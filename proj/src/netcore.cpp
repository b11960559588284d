#include "cmba/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "cmba/errors.hpp"
#include "cmba/rng.hpp"

namespace cmba {

namespace {

std::string shape_msg(const char* what, std::size_t got, std::size_t want) {
    return std::string(what) + ": got " + std::to_string(got) + ", expected " +
           std::to_string(want);
}

void apply_activation(Activation act, std::vector<double>& z) {
    switch (act) {
    case Activation::Identity:
        return;
    case Activation::Tanh:
        for (double& v : z) v = std::tanh(v);
        return;
    case Activation::Relu:
        for (double& v : z) v = v > 0.0 ? v : 0.0;
        return;
    case Activation::Softmax: {
        double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : z) v /= sum;
        return;
    }
    }
}

// dL/dz from dL/dy, where y = act(z). Needs the pre-activation for relu and
// the activated value for tanh/softmax.
std::vector<double> activation_backward(Activation act, const std::vector<double>& preact,
                                        const std::vector<double>& activated,
                                        std::span<const double> upstream) {
    std::vector<double> g(upstream.begin(), upstream.end());
    switch (act) {
    case Activation::Identity:
        return g;
    case Activation::Tanh:
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - activated[i] * activated[i];
        return g;
    case Activation::Relu:
        for (std::size_t i = 0; i < g.size(); ++i)
            if (preact[i] <= 0.0) g[i] = 0.0;
        return g;
    case Activation::Softmax: {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += upstream[i] * activated[i];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = activated[i] * (upstream[i] - s);
        return g;
    }
    }
    return g;
}

} // namespace

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Softmax: return "softmax";
    }
    return "?";
}

void validate_net(const DenseNet& net) {
    if (net.layer_sizes.size() < 2)
        throw ConfigError("net needs at least an input and an output layer");
    for (std::size_t s : net.layer_sizes)
        if (s == 0) throw ConfigError("layer sizes must be positive");
    if (net.weights.size() != net.layer_sizes.size() - 1 ||
        net.biases.size() != net.layer_sizes.size() - 1)
        throw ShapeError("parameter block count does not match layer_sizes");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (net.weights[l].rows != net.layer_sizes[l + 1] ||
            net.weights[l].cols != net.layer_sizes[l])
            throw ShapeError("weight matrix shape mismatch at layer " + std::to_string(l));
        if (net.biases[l].size() != net.layer_sizes[l + 1])
            throw ShapeError("bias length mismatch at layer " + std::to_string(l));
    }
}

DenseNet make_dense_net(std::vector<std::size_t> layer_sizes, Activation hidden_activation,
                        Activation output_activation, std::uint64_t seed) {
    DenseNet net;
    net.layer_sizes = std::move(layer_sizes);
    net.hidden_activation = hidden_activation;
    net.output_activation = output_activation;
    if (net.layer_sizes.size() < 2)
        throw ConfigError("net needs at least an input and an output layer");
    for (std::size_t s : net.layer_sizes)
        if (s == 0) throw ConfigError("layer sizes must be positive");

    Rng rng(seed);
    const std::size_t layers = net.layer_sizes.size() - 1;
    net.weights.reserve(layers);
    net.biases.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = net.layer_sizes[l];
        const std::size_t out = net.layer_sizes[l + 1];
        Matrix w(out, in);
        std::vector<double> b(out, 0.0);
        const bool zero_head =
            l == layers - 1 && output_activation == Activation::Softmax;
        if (!zero_head) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            for (double& v : w.data) v = uniform(rng, -bound, bound);
            for (double& v : b) v = uniform(rng, -bound, bound);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x) {
    if (x.size() != net.input_size())
        throw ShapeError(shape_msg("forward input size", x.size(), net.input_size()));
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights[l];
        next.assign(w.rows, 0.0);
        for (std::size_t o = 0; o < w.rows; ++o)
            next[o] = dot(w.row(o), cur) + net.biases[l][o];
        apply_activation(l + 1 == net.layer_sizes.size() - 1 ? net.output_activation
                                                             : net.hidden_activation,
                         next);
        cur.swap(next);
    }
    return cur;
}

ForwardTrace forward_trace(const DenseNet& net, std::span<const double> x) {
    if (x.size() != net.input_size())
        throw ShapeError(shape_msg("forward input size", x.size(), net.input_size()));
    ForwardTrace t;
    t.layer_inputs.reserve(net.layer_count());
    t.preacts.reserve(net.layer_count());
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        t.layer_inputs.push_back(cur);
        const Matrix& w = net.weights[l];
        std::vector<double> z(w.rows, 0.0);
        for (std::size_t o = 0; o < w.rows; ++o)
            z[o] = dot(w.row(o), cur) + net.biases[l][o];
        t.preacts.push_back(z);
        apply_activation(l + 1 == net.layer_sizes.size() - 1 ? net.output_activation
                                                             : net.hidden_activation,
                         z);
        cur.swap(z);
    }
    t.output = std::move(cur);
    return t;
}

namespace {

// Shared reverse pass; fills *pg when non-null, returns dL/dx.
std::vector<double> backward_impl(const DenseNet& net, const ForwardTrace& trace,
                                  std::span<const double> upstream, ParamGradients* pg) {
    if (upstream.size() != net.output_size())
        throw ShapeError(shape_msg("upstream size", upstream.size(), net.output_size()));
    const std::size_t layers = net.layer_count();
    if (pg) {
        pg->weights.clear();
        pg->biases.clear();
        for (std::size_t l = 0; l < layers; ++l) {
            pg->weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
            pg->biases.emplace_back(net.biases[l].size(), 0.0);
        }
    }

    // activation of layer l's output: trace.layer_inputs[l+1], except the top.
    const auto activated = [&](std::size_t l) -> const std::vector<double>& {
        return l + 1 < layers ? trace.layer_inputs[l + 1] : trace.output;
    };

    std::vector<double> g = activation_backward(net.output_activation, trace.preacts[layers - 1],
                                                activated(layers - 1), upstream);
    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& w = net.weights[l];
        const std::vector<double>& a = trace.layer_inputs[l];
        if (pg) {
            Matrix& dw = pg->weights[l];
            for (std::size_t o = 0; o < w.rows; ++o) {
                axpy(g[o], a, dw.row(o));
                pg->biases[l][o] += g[o];
            }
        }
        std::vector<double> da(w.cols, 0.0);
        for (std::size_t o = 0; o < w.rows; ++o) axpy(g[o], w.row(o), da);
        if (l == 0) return da;
        g = activation_backward(net.hidden_activation, trace.preacts[l - 1], a, da);
    }
    return {};
}

} // namespace

std::vector<double> input_gradient(const DenseNet& net, const ForwardTrace& trace,
                                   std::span<const double> upstream) {
    return backward_impl(net, trace, upstream, nullptr);
}

std::vector<double> input_gradient(const DenseNet& net, std::span<const double> x,
                                   std::span<const double> upstream) {
    ForwardTrace t = forward_trace(net, x);
    return backward_impl(net, t, upstream, nullptr);
}

ParamGradients parameter_gradients(const DenseNet& net, const ForwardTrace& trace,
                                   std::span<const double> upstream,
                                   std::vector<double>* input_grad) {
    ParamGradients pg;
    std::vector<double> ig = backward_impl(net, trace, upstream, &pg);
    if (input_grad) *input_grad = std::move(ig);
    return pg;
}

// ---------------------------------------------------------------------------
// Batched training
// ---------------------------------------------------------------------------

namespace {

struct BatchBuffers {
    std::vector<Matrix> acts; // acts[0] = batch input, acts[L] = output
    std::vector<Matrix> pres; // pre-activations per layer
    std::vector<Matrix> gbuf; // gradient scratch per layer width
};

void batch_apply_activation(Activation act, Matrix& m, std::size_t rows) {
    switch (act) {
    case Activation::Identity:
        return;
    case Activation::Tanh:
        for (std::size_t r = 0; r < rows; ++r)
            for (double& v : m.row(r)) v = std::tanh(v);
        return;
    case Activation::Relu:
        for (std::size_t r = 0; r < rows; ++r)
            for (double& v : m.row(r)) v = v > 0.0 ? v : 0.0;
        return;
    case Activation::Softmax:
        for (std::size_t r = 0; r < rows; ++r) {
            auto row = m.row(r);
            double mx = *std::max_element(row.begin(), row.end());
            double sum = 0.0;
            for (double& v : row) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (double& v : row) v /= sum;
        }
        return;
    }
}

void batch_activation_backward(Activation act, const Matrix& pre, const Matrix& post, Matrix& g,
                               std::size_t rows) {
    switch (act) {
    case Activation::Identity:
        return;
    case Activation::Tanh:
        for (std::size_t r = 0; r < rows; ++r) {
            auto gr = g.row(r);
            auto yr = post.row(r);
            for (std::size_t j = 0; j < gr.size(); ++j) gr[j] *= 1.0 - yr[j] * yr[j];
        }
        return;
    case Activation::Relu:
        for (std::size_t r = 0; r < rows; ++r) {
            auto gr = g.row(r);
            auto zr = pre.row(r);
            for (std::size_t j = 0; j < gr.size(); ++j)
                if (zr[j] <= 0.0) gr[j] = 0.0;
        }
        return;
    case Activation::Softmax:
        for (std::size_t r = 0; r < rows; ++r) {
            auto gr = g.row(r);
            auto yr = post.row(r);
            double s = 0.0;
            for (std::size_t j = 0; j < gr.size(); ++j) s += gr[j] * yr[j];
            for (std::size_t j = 0; j < gr.size(); ++j) gr[j] = yr[j] * (gr[j] - s);
        }
        return;
    }
}

// acts[l+1] = act(acts[l] * W^T + b) for the first `rows` rows.
void batch_forward(const DenseNet& net, BatchBuffers& buf, std::size_t rows) {
    const std::size_t layers = net.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const Matrix& w = net.weights[l];
        Matrix& z = buf.pres[l];
        const Matrix& a = buf.acts[l];
        for (std::size_t r = 0; r < rows; ++r) {
            auto ar = a.row(r);
            auto zr = z.row(r);
            for (std::size_t o = 0; o < w.rows; ++o)
                zr[o] = dot(w.row(o), ar) + net.biases[l][o];
        }
        Matrix& out = buf.acts[l + 1];
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(z.row(r).begin(), z.cols, out.row(r).begin());
        batch_apply_activation(l + 1 == layers ? net.output_activation : net.hidden_activation,
                               out, rows);
    }
}

// Accumulates parameter gradients for the mean-over-batch squared error loss.
// buf.gbuf[layers] must hold dL/d(output) on entry.
void batch_backward(const DenseNet& net, BatchBuffers& buf, std::size_t rows,
                    ParamGradients& pg) {
    const std::size_t layers = net.layer_count();
    batch_activation_backward(net.output_activation, buf.pres[layers - 1], buf.acts[layers],
                              buf.gbuf[layers], rows);
    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& w = net.weights[l];
        Matrix& g = buf.gbuf[l + 1];
        Matrix& dw = pg.weights[l];
        std::vector<double>& db = pg.biases[l];
        const Matrix& a = buf.acts[l];
        dw.fill(0.0);
        std::fill(db.begin(), db.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            auto gr = g.row(r);
            auto ar = a.row(r);
            for (std::size_t o = 0; o < w.rows; ++o) {
                axpy(gr[o], ar, dw.row(o));
                db[o] += gr[o];
            }
        }
        if (l == 0) break;
        Matrix& gprev = buf.gbuf[l];
        for (std::size_t r = 0; r < rows; ++r) {
            auto gp = gprev.row(r);
            std::fill(gp.begin(), gp.end(), 0.0);
            auto gr = g.row(r);
            for (std::size_t o = 0; o < w.rows; ++o) axpy(gr[o], w.row(o), gp);
        }
        batch_activation_backward(net.hidden_activation, buf.pres[l - 1], buf.acts[l], gprev,
                                  rows);
    }
}

struct AdamWState {
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    long step = 0;

    explicit AdamWState(const DenseNet& net) {
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            mw.emplace_back(net.weights[l].rows, net.weights[l].cols);
            vw.emplace_back(net.weights[l].rows, net.weights[l].cols);
            mb.emplace_back(net.biases[l].size(), 0.0);
            vb.emplace_back(net.biases[l].size(), 0.0);
        }
    }
};

void adamw_update(DenseNet& net, const ParamGradients& pg, AdamWState& st, double lr,
                  double weight_decay) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++st.step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& w = net.weights[l].data;
        const auto& gw = pg.weights[l].data;
        auto& mw = st.mw[l].data;
        auto& vw = st.vw[l].data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            mw[i] = b1 * mw[i] + (1.0 - b1) * gw[i];
            vw[i] = b2 * vw[i] + (1.0 - b2) * gw[i] * gw[i];
            // decoupled weight decay on weights only
            w[i] -= lr * (mw[i] / c1 / (std::sqrt(vw[i] / c2) + eps) + weight_decay * w[i]);
        }
        auto& b = net.biases[l];
        const auto& gb = pg.biases[l];
        auto& mb = st.mb[l];
        auto& vb = st.vb[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
            mb[i] = b1 * mb[i] + (1.0 - b1) * gb[i];
            vb[i] = b2 * vb[i] + (1.0 - b2) * gb[i] * gb[i];
            b[i] -= lr * mb[i] / c1 / (std::sqrt(vb[i] / c2) + eps);
        }
    }
}

// Mean over rows of the squared error norm.
double batch_mse(const DenseNet& net, const Matrix& x, const Matrix& y,
                 const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
    if (hi <= lo) return 0.0;
    double total = 0.0;
    std::vector<double> row(x.cols);
    for (std::size_t k = lo; k < hi; ++k) {
        auto xr = x.row(idx[k]);
        std::copy(xr.begin(), xr.end(), row.begin());
        std::vector<double> p = forward(net, row);
        auto yr = y.row(idx[k]);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double d = p[j] - yr[j];
            total += d * d;
        }
    }
    return total / static_cast<double>(hi - lo);
}

} // namespace

FitResult fit_regression(const DenseNet& net, const Matrix& inputs, const Matrix& targets,
                         const TrainConfig& cfg) {
    validate_net(net);
    if (inputs.rows == 0) throw ConfigError("fit_regression: empty dataset");
    if (inputs.rows != targets.rows)
        throw ShapeError(shape_msg("target row count", targets.rows, inputs.rows));
    if (inputs.cols != net.input_size())
        throw ShapeError(shape_msg("input column count", inputs.cols, net.input_size()));
    if (targets.cols != net.output_size())
        throw ShapeError(shape_msg("target column count", targets.cols, net.output_size()));
    if (cfg.lr_grid.empty()) throw ConfigError("fit_regression: lr_grid must be nonempty");
    if (cfg.batch_size == 0) throw ConfigError("fit_regression: batch_size must be positive");

    const std::size_t rows = inputs.rows;
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(cfg.seed);
    for (std::size_t i = rows; i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng() % i)]);

    const std::size_t holdout = rows >= 2 ? std::max<std::size_t>(1, rows / 10) : 0;
    const std::size_t train_rows = rows - holdout;

    const std::size_t max_batch = std::min(cfg.batch_size, std::max<std::size_t>(train_rows, 1));
    BatchBuffers buf;
    buf.acts.emplace_back(max_batch, net.input_size());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        buf.pres.emplace_back(max_batch, net.layer_sizes[l + 1]);
        buf.acts.emplace_back(max_batch, net.layer_sizes[l + 1]);
    }
    buf.gbuf.resize(net.layer_count() + 1);
    for (std::size_t l = 0; l <= net.layer_count(); ++l)
        buf.gbuf[l] = Matrix(max_batch, net.layer_sizes[l]);

    FitResult result;
    bool have_best = false;
    for (double lr : cfg.lr_grid) {
        if (lr <= 0.0) throw ConfigError("fit_regression: learning rates must be positive");
        DenseNet candidate = net;
        if (cfg.epochs > 0 && train_rows > 0) {
            AdamWState adam(candidate);
            ParamGradients pg;
            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                pg.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
                pg.biases.emplace_back(net.biases[l].size(), 0.0);
            }
            for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
                for (std::size_t start = 0; start < train_rows; start += max_batch) {
                    const std::size_t brows = std::min(max_batch, train_rows - start);
                    for (std::size_t r = 0; r < brows; ++r) {
                        auto src = inputs.row(idx[start + r]);
                        std::copy(src.begin(), src.end(), buf.acts[0].row(r).begin());
                    }
                    batch_forward(candidate, buf, brows);
                    Matrix& gout = buf.gbuf[net.layer_count()];
                    const Matrix& pred = buf.acts[net.layer_count()];
                    const double scale = 2.0 / static_cast<double>(brows);
                    for (std::size_t r = 0; r < brows; ++r) {
                        auto yr = targets.row(idx[start + r]);
                        auto pr = pred.row(r);
                        auto gr = gout.row(r);
                        for (std::size_t j = 0; j < yr.size(); ++j)
                            gr[j] = scale * (pr[j] - yr[j]);
                    }
                    batch_backward(candidate, buf, brows, pg);
                    adamw_update(candidate, pg, adam, lr, cfg.weight_decay);
                }
            }
        }
        const double hold_mse = holdout > 0
                                    ? batch_mse(candidate, inputs, targets, idx, train_rows, rows)
                                    : batch_mse(candidate, inputs, targets, idx, 0, rows);
        result.lr_holdout.emplace_back(lr, hold_mse);
        if (!have_best || hold_mse < result.holdout_mse) {
            have_best = true;
            result.net = std::move(candidate);
            result.holdout_mse = hold_mse;
            result.chosen_lr = lr;
        }
    }
    result.train_loss = batch_mse(result.net, inputs, targets, idx, 0, train_rows);
    return result;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'M', 'B', 'A', 'N', 'E', 'T', '1'};
constexpr std::size_t kMaxLayers = 64;
constexpr std::size_t kMaxLayerSize = 1u << 24;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

struct Reader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;

    void read(void* dst, std::size_t n, const std::string& what) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw ParseError("model file " + path + ": truncated " + what + " at offset " +
                             std::to_string(offset));
        offset += n;
    }
    std::uint32_t u32(const std::string& what) {
        std::uint32_t v = 0;
        read(&v, sizeof v, what);
        return v;
    }
    std::uint8_t u8(const std::string& what) {
        std::uint8_t v = 0;
        read(&v, sizeof v, what);
        return v;
    }
};

} // namespace

void save_net(const DenseNet& net, const std::string& path) {
    validate_net(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof kMagic);
    write_u32(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
    for (std::size_t s : net.layer_sizes) write_u32(out, static_cast<std::uint32_t>(s));
    const std::uint8_t acts[2] = {static_cast<std::uint8_t>(net.hidden_activation),
                                  static_cast<std::uint8_t>(net.output_activation)};
    out.write(reinterpret_cast<const char*>(acts), 2);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        write_doubles(out, net.weights[l].data);
        write_doubles(out, net.biases[l]);
    }
    if (!out) throw IoError("write failed for " + path);
}

DenseNet load_net(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("cannot open " + path);

    char magic[8];
    r.read(magic, sizeof magic, "magic");
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ParseError("model file " + path + ": bad magic (not a CMBANET1 container)");

    const std::uint32_t n_sizes = r.u32("layer count");
    if (n_sizes < 2 || n_sizes > kMaxLayers)
        throw ParseError("model file " + path + ": implausible layer count " +
                         std::to_string(n_sizes));
    DenseNet net;
    net.layer_sizes.resize(n_sizes);
    for (std::uint32_t i = 0; i < n_sizes; ++i) {
        const std::uint32_t s = r.u32("layer size " + std::to_string(i));
        if (s == 0 || s > kMaxLayerSize)
            throw ParseError("model file " + path + ": implausible size of layer " +
                             std::to_string(i));
        net.layer_sizes[i] = s;
    }
    const std::uint8_t ha = r.u8("hidden activation");
    const std::uint8_t oa = r.u8("output activation");
    if (ha > 3 || oa > 3)
        throw ParseError("model file " + path + ": unknown activation code");
    net.hidden_activation = static_cast<Activation>(ha);
    net.output_activation = static_cast<Activation>(oa);

    for (std::uint32_t l = 0; l + 1 < n_sizes; ++l) {
        const std::size_t in = net.layer_sizes[l];
        const std::size_t out = net.layer_sizes[l + 1];
        Matrix w(out, in);
        r.read(w.data.data(), w.data.size() * sizeof(double),
               "weight block of layer " + std::to_string(l));
        std::vector<double> b(out);
        r.read(b.data(), b.size() * sizeof(double), "bias block of layer " + std::to_string(l));
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    char extra;
    r.in.read(&extra, 1);
    if (r.in.gcount() != 0)
        throw ParseError("model file " + path + ": trailing data at offset " +
                         std::to_string(r.offset));
    validate_net(net);
    return net;
}

} // namespace cmba
