#include "vxw/network.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vxw/binio.hpp"
#include "vxw/errors.hpp"
#include "vxw/rng.hpp"

namespace vxw {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr char kModelMagic[4] = {'V', 'X', 'W', 'M'};
constexpr std::uint32_t kModelVersion = 1;

// Seed stream tags within one training run.
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagShuffle = 2;
constexpr std::uint64_t kTagCorrupt = 3;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_dim(std::size_t got, std::size_t want, const char* where) {
    if (got != want)
        throw Error(std::string(where) + ": dimension mismatch, got " + std::to_string(got) +
                    ", expected " + std::to_string(want));
}

// Forward state of one branch: encoder activations h[0..K] (h[0] is the
// corrupted input) and decoder activations d[0..K] (d[K] aliases h[K],
// d[0] is the reconstruction).
struct BranchPass {
    std::vector<std::vector<double>> h;
    std::vector<std::vector<double>> d;
};

BranchPass forward(const SiameseModel& m, std::span<const double> corrupted) {
    check_dim(corrupted.size(), m.input_dim(), "forward");
    const std::size_t depth = m.layers.size();
    BranchPass pass;
    pass.h.resize(depth + 1);
    pass.h[0].assign(corrupted.begin(), corrupted.end());
    for (std::size_t k = 0; k < depth; ++k) {
        const LayerParams& l = m.layers[k];
        const std::vector<double>& in = pass.h[k];
        std::vector<double>& out = pass.h[k + 1];
        out.resize(l.fan_out);
        for (std::size_t o = 0; o < l.fan_out; ++o) {
            double acc = l.b_enc[o];
            const double* row = &l.weights[o * l.fan_in];
            for (std::size_t i = 0; i < l.fan_in; ++i) acc += row[i] * in[i];
            out[o] = sigmoid(acc);
        }
    }
    pass.d.resize(depth + 1);
    pass.d[depth] = pass.h[depth];
    for (std::size_t k = depth; k-- > 0;) {
        const LayerParams& l = m.layers[k];
        const std::vector<double>& in = pass.d[k + 1];
        std::vector<double>& out = pass.d[k];
        out = l.b_dec;
        for (std::size_t o = 0; o < l.fan_out; ++o) {
            const double* row = &l.weights[o * l.fan_in];
            const double dv = in[o];
            for (std::size_t i = 0; i < l.fan_in; ++i) out[i] += row[i] * dv;
        }
        for (double& v : out) v = sigmoid(v);
    }
    return pass;
}

double squared_error(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        s += e * e;
    }
    return s;
}

double norm2(std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double checked_cosine(std::span<const double> u, std::span<const double> v, double& nu,
                      double& nv) {
    nu = norm2(u);
    nv = norm2(v);
    if (nu < kNormFloor || nv < kNormFloor)
        throw DegenerateCosineError("representation norm below " + std::to_string(kNormFloor) +
                                    "; the encoder has collapsed");
    return std::inner_product(u.begin(), u.end(), v.begin(), 0.0) / (nu * nv);
}

std::vector<LayerParams> zero_like(const SiameseModel& m) {
    std::vector<LayerParams> g(m.layers.size());
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        g[k].fan_in = m.layers[k].fan_in;
        g[k].fan_out = m.layers[k].fan_out;
        g[k].weights.assign(m.layers[k].weights.size(), 0.0);
        g[k].b_enc.assign(m.layers[k].b_enc.size(), 0.0);
        g[k].b_dec.assign(m.layers[k].b_dec.size(), 0.0);
    }
    return g;
}

// Backpropagates one branch into `grad`. `delta_code` is dL/d(middle
// representation) from the cosine term; `delta_recon` is dL/d(x_hat).
void backward_branch(const SiameseModel& m, const BranchPass& pass,
                     std::vector<double> delta_recon, std::span<const double> delta_code,
                     std::vector<LayerParams>& grad) {
    const std::size_t depth = m.layers.size();

    // Decoder sweep, reconstruction upward to the code layer.
    std::vector<double> delta_d = std::move(delta_recon);  // dL/d(d[k]) for k = 0
    for (std::size_t k = 0; k < depth; ++k) {
        const LayerParams& l = m.layers[k];
        // dL/d(pre-activation of d[k]) via sigmoid derivative.
        std::vector<double> delta_pre(l.fan_in);
        for (std::size_t i = 0; i < l.fan_in; ++i) {
            const double y = pass.d[k][i];
            delta_pre[i] = delta_d[i] * y * (1.0 - y);
        }
        std::vector<double> next(l.fan_out, 0.0);
        for (std::size_t o = 0; o < l.fan_out; ++o) {
            const double* row = &m.layers[k].weights[o * l.fan_in];
            double* grow = &grad[k].weights[o * l.fan_in];
            const double dk = pass.d[k + 1][o];
            double acc = 0.0;
            for (std::size_t i = 0; i < l.fan_in; ++i) {
                grow[i] += dk * delta_pre[i];
                acc += row[i] * delta_pre[i];
            }
            next[o] = acc;
        }
        for (std::size_t i = 0; i < l.fan_in; ++i) grad[k].b_dec[i] += delta_pre[i];
        delta_d = std::move(next);
    }

    // Encoder sweep, code layer down to the input.
    std::vector<double> delta_h(m.code_dim());
    for (std::size_t o = 0; o < delta_h.size(); ++o) delta_h[o] = delta_d[o] + delta_code[o];
    for (std::size_t k = depth; k-- > 0;) {
        const LayerParams& l = m.layers[k];
        std::vector<double> delta_a(l.fan_out);
        for (std::size_t o = 0; o < l.fan_out; ++o) {
            const double y = pass.h[k + 1][o];
            delta_a[o] = delta_h[o] * y * (1.0 - y);
        }
        std::vector<double> next(l.fan_in, 0.0);
        for (std::size_t o = 0; o < l.fan_out; ++o) {
            const double* row = &m.layers[k].weights[o * l.fan_in];
            double* grow = &grad[k].weights[o * l.fan_in];
            const double da = delta_a[o];
            const std::vector<double>& in = pass.h[k];
            for (std::size_t i = 0; i < l.fan_in; ++i) {
                grow[i] += da * in[i];
                next[i] += row[i] * da;
            }
            grad[k].b_enc[o] += da;
        }
        delta_h = std::move(next);
    }
}

// Shared core of pair_loss_grad and the training loops: adds this pair's
// gradient into `grad` and returns the forward quantities.
void accumulate_pair(const SiameseModel& m, std::span<const double> x1,
                     std::span<const double> x2, std::span<const double> c1,
                     std::span<const double> c2, std::vector<LayerParams>& grad, double& loss,
                     double& cosine, double& recon) {
    check_dim(x1.size(), m.input_dim(), "pair_loss");
    check_dim(x2.size(), m.input_dim(), "pair_loss");

    const BranchPass p1 = forward(m, c1);
    const BranchPass p2 = forward(m, c2);
    const std::vector<double>& g1 = p1.h.back();
    const std::vector<double>& g2 = p2.h.back();

    double n1 = 0.0, n2 = 0.0;
    cosine = checked_cosine(g1, g2, n1, n2);
    const double inv_dim = 1.0 / static_cast<double>(m.input_dim());
    recon = (squared_error(x1, p1.d[0]) + squared_error(x2, p2.d[0])) * inv_dim;
    loss = m.alpha * recon - (1.0 - m.alpha) * cosine;

    // d(cos)/d(g1) = g2/(n1*n2) - cos * g1/n1^2, symmetrically for g2.
    const std::size_t cd = m.code_dim();
    std::vector<double> dg1(cd), dg2(cd);
    const double w = -(1.0 - m.alpha);
    for (std::size_t i = 0; i < cd; ++i) {
        dg1[i] = w * (g2[i] / (n1 * n2) - cosine * g1[i] / (n1 * n1));
        dg2[i] = w * (g1[i] / (n1 * n2) - cosine * g2[i] / (n2 * n2));
    }

    std::vector<double> dr1(x1.size()), dr2(x2.size());
    const double rw = 2.0 * m.alpha * inv_dim;
    for (std::size_t i = 0; i < x1.size(); ++i) dr1[i] = rw * (p1.d[0][i] - x1[i]);
    for (std::size_t i = 0; i < x2.size(); ++i) dr2[i] = rw * (p2.d[0][i] - x2[i]);

    backward_branch(m, p1, std::move(dr1), dg1, grad);
    backward_branch(m, p2, std::move(dr2), dg2, grad);
}

LayerParams init_layer(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    LayerParams l;
    l.fan_in = fan_in;
    l.fan_out = fan_out;
    l.weights.resize(fan_in * fan_out);
    l.b_enc.assign(fan_out, 0.0);
    l.b_dec.assign(fan_in, 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::mt19937_64 rng(seed);
    for (double& w : l.weights) w = (2.0 * uniform01(rng) - 1.0) * bound;
    return l;
}

void apply_update(LayerParams& l, const LayerParams& g, double scale) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= scale * g.weights[i];
    for (std::size_t i = 0; i < l.b_enc.size(); ++i) l.b_enc[i] -= scale * g.b_enc[i];
    for (std::size_t i = 0; i < l.b_dec.size(); ++i) l.b_dec[i] -= scale * g.b_dec[i];
}

void zero_grad(std::vector<LayerParams>& g) {
    for (LayerParams& l : g) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.b_enc.begin(), l.b_enc.end(), 0.0);
        std::fill(l.b_dec.begin(), l.b_dec.end(), 0.0);
    }
}

}  // namespace

std::string progress_line(const TrainProgress& p) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%s epoch %zu loss %.9g cosine %.9g mse %.9g",
                  p.phase.c_str(), p.epoch, p.mean_loss, p.mean_cosine, p.mean_mse);
    return buf;
}

std::vector<double> layer_encode(const LayerParams& l, std::span<const double> x) {
    check_dim(x.size(), l.fan_in, "layer_encode");
    std::vector<double> out(l.fan_out);
    for (std::size_t o = 0; o < l.fan_out; ++o) {
        double acc = l.b_enc[o];
        const double* row = &l.weights[o * l.fan_in];
        for (std::size_t i = 0; i < l.fan_in; ++i) acc += row[i] * x[i];
        out[o] = sigmoid(acc);
    }
    return out;
}

std::vector<double> layer_decode(const LayerParams& l, std::span<const double> h) {
    check_dim(h.size(), l.fan_out, "layer_decode");
    std::vector<double> out = l.b_dec;
    for (std::size_t o = 0; o < l.fan_out; ++o) {
        const double* row = &l.weights[o * l.fan_in];
        for (std::size_t i = 0; i < l.fan_in; ++i) out[i] += row[i] * h[o];
    }
    for (double& v : out) v = sigmoid(v);
    return out;
}

std::vector<double> encode(const SiameseModel& m, std::span<const double> x) {
    if (m.layers.empty()) throw Error("encode: model has no layers");
    check_dim(x.size(), m.input_dim(), "encode");
    std::vector<double> h(x.begin(), x.end());
    for (const LayerParams& l : m.layers) h = layer_encode(l, h);
    return h;
}

std::vector<double> reconstruct(const SiameseModel& m, std::span<const double> x) {
    if (m.layers.empty()) throw Error("reconstruct: model has no layers");
    BranchPass pass = forward(m, x);
    return std::move(pass.d[0]);
}

double pair_loss(const SiameseModel& m, std::span<const double> x1, std::span<const double> x2,
                 std::span<const double> x1_corrupted, std::span<const double> x2_corrupted) {
    if (m.layers.empty()) throw Error("pair_loss: model has no layers");
    check_dim(x1.size(), m.input_dim(), "pair_loss");
    check_dim(x2.size(), m.input_dim(), "pair_loss");
    const std::vector<double> g1 = encode(m, x1_corrupted);
    const std::vector<double> g2 = encode(m, x2_corrupted);
    double n1 = 0.0, n2 = 0.0;
    const double cosine = checked_cosine(g1, g2, n1, n2);
    const double recon = (squared_error(x1, reconstruct(m, x1_corrupted)) +
                          squared_error(x2, reconstruct(m, x2_corrupted))) /
                         static_cast<double>(m.input_dim());
    return m.alpha * recon - (1.0 - m.alpha) * cosine;
}

PairGradient pair_loss_grad(const SiameseModel& m, std::span<const double> x1,
                            std::span<const double> x2, std::span<const double> x1_corrupted,
                            std::span<const double> x2_corrupted) {
    if (m.layers.empty()) throw Error("pair_loss_grad: model has no layers");
    PairGradient out;
    out.layers = zero_like(m);
    accumulate_pair(m, x1, x2, x1_corrupted, x2_corrupted, out.layers, out.loss, out.cosine,
                    out.recon);
    return out;
}

LayerParams pretrain_layer(const std::vector<std::vector<double>>& inputs, std::size_t fan_out,
                           double corruption_rate, const SgdConfig& sgd,
                           const ProgressFn& progress, const std::string& phase) {
    if (inputs.empty()) throw Error("pretrain_layer: empty training set");
    if (fan_out == 0) throw Error("pretrain_layer: fan_out must be positive");
    const std::size_t fan_in = inputs.front().size();
    for (const auto& x : inputs) check_dim(x.size(), fan_in, "pretrain_layer");
    if (sgd.batch_size == 0) throw Error("pretrain_layer: batch_size must be positive");

    LayerParams layer = init_layer(fan_in, fan_out, mix_seed(sgd.seed, kTagInit));
    LayerParams grad = layer;
    std::mt19937_64 shuffle_rng(mix_seed(sgd.seed, kTagShuffle));

    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);
    const double inv_dim = 1.0 / static_cast<double>(fan_in);

    for (std::size_t epoch = 0; epoch < sgd.epochs; ++epoch) {
        shuffle_inplace(order, shuffle_rng);
        const std::uint64_t epoch_key = mix_seed(mix_seed(sgd.seed, kTagCorrupt), epoch);
        double sum_sq = 0.0;

        for (std::size_t start = 0; start < order.size(); start += sgd.batch_size) {
            const std::size_t stop = std::min(order.size(), start + sgd.batch_size);
            std::fill(grad.weights.begin(), grad.weights.end(), 0.0);
            std::fill(grad.b_enc.begin(), grad.b_enc.end(), 0.0);
            std::fill(grad.b_dec.begin(), grad.b_dec.end(), 0.0);

            for (std::size_t n = start; n < stop; ++n) {
                const std::size_t id = order[n];
                const std::vector<double>& clean = inputs[id];
                Patch tmp;
                tmp.values = clean;
                const std::vector<double> noisy =
                    corrupt(tmp, corruption_rate, mix_seed(epoch_key, id)).values;

                const std::vector<double> h = layer_encode(layer, noisy);
                const std::vector<double> xhat = layer_decode(layer, h);

                std::vector<double> delta_pre(fan_in);
                double sq = 0.0;
                for (std::size_t i = 0; i < fan_in; ++i) {
                    const double e = xhat[i] - clean[i];
                    sq += e * e;
                    delta_pre[i] = 2.0 * inv_dim * e * xhat[i] * (1.0 - xhat[i]);
                }
                sum_sq += sq * inv_dim;

                std::vector<double> delta_h(fan_out, 0.0);
                for (std::size_t o = 0; o < fan_out; ++o) {
                    const double* row = &layer.weights[o * fan_in];
                    double* grow = &grad.weights[o * fan_in];
                    double acc = 0.0;
                    for (std::size_t i = 0; i < fan_in; ++i) {
                        grow[i] += h[o] * delta_pre[i];
                        acc += row[i] * delta_pre[i];
                    }
                    delta_h[o] = acc;
                }
                for (std::size_t i = 0; i < fan_in; ++i) grad.b_dec[i] += delta_pre[i];
                for (std::size_t o = 0; o < fan_out; ++o) {
                    const double da = delta_h[o] * h[o] * (1.0 - h[o]);
                    double* grow = &grad.weights[o * fan_in];
                    for (std::size_t i = 0; i < fan_in; ++i) grow[i] += da * noisy[i];
                    grad.b_enc[o] += da;
                }
            }
            apply_update(layer, grad, sgd.learning_rate / static_cast<double>(stop - start));
        }

        if (progress) {
            TrainProgress p;
            p.phase = phase;
            p.epoch = epoch + 1;
            p.mean_loss = sum_sq / static_cast<double>(inputs.size());
            p.mean_cosine = 0.0;
            p.mean_mse = p.mean_loss;
            progress(p);
        }
    }
    return layer;
}

SiameseModel pretrain_stack(const std::vector<std::vector<double>>& inputs,
                            const std::vector<std::size_t>& widths,
                            const std::vector<double>& corruption_rates, const SgdConfig& sgd,
                            const ProgressFn& progress) {
    if (widths.empty()) throw Error("pretrain_stack: empty layer stack");
    if (widths.size() != corruption_rates.size())
        throw Error("pretrain_stack: widths and corruption rates differ in length");
    if (inputs.empty()) throw Error("pretrain_stack: empty training set");

    SiameseModel model;
    std::vector<std::vector<double>> codes = inputs;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        SgdConfig layer_sgd = sgd;
        layer_sgd.seed = sgd.seed + k;
        const std::string phase = "pretrain-" + std::to_string(k + 1);
        LayerParams layer =
            pretrain_layer(codes, widths[k], corruption_rates[k], layer_sgd, progress, phase);
        if (k + 1 < widths.size())
            for (std::vector<double>& c : codes) c = layer_encode(layer, c);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

void finetune(SiameseModel& m, const PairBatch& pairs, const SgdConfig& sgd,
              const ProgressFn& progress) {
    if (m.layers.empty()) throw Error("finetune: model has no layers");
    if (pairs.pairs.empty()) throw Error("finetune: empty pair batch");
    if (sgd.batch_size == 0) throw Error("finetune: batch_size must be positive");

    std::vector<LayerParams> grad = zero_like(m);
    std::mt19937_64 shuffle_rng(mix_seed(sgd.seed, kTagShuffle));
    std::vector<std::size_t> order(pairs.pairs.size());
    std::iota(order.begin(), order.end(), 0);


    for (std::size_t epoch = 0; epoch < sgd.epochs; ++epoch) {
        shuffle_inplace(order, shuffle_rng);
        const std::uint64_t epoch_key = mix_seed(mix_seed(sgd.seed, kTagCorrupt), epoch);
        double sum_loss = 0.0, sum_cos = 0.0, sum_sq = 0.0;

        for (std::size_t start = 0; start < order.size(); start += sgd.batch_size) {
            const std::size_t stop = std::min(order.size(), start + sgd.batch_size);
            zero_grad(grad);
            for (std::size_t n = start; n < stop; ++n) {
                const std::size_t id = order[n];
                const PatchPair& pair = pairs.pairs[id];
                const Patch c1 =
                    corrupt(pair.first, m.corruption_finetune, mix_seed(epoch_key, 2 * id));
                const Patch c2 =
                    corrupt(pair.second, m.corruption_finetune, mix_seed(epoch_key, 2 * id + 1));
                double loss = 0.0, cosine = 0.0, recon = 0.0;
                accumulate_pair(m, pair.first.values, pair.second.values, c1.values, c2.values,
                                grad, loss, cosine, recon);
                sum_loss += loss;
                sum_cos += cosine;
                sum_sq += recon;
            }
            const double scale = sgd.learning_rate / static_cast<double>(stop - start);
            for (std::size_t k = 0; k < m.layers.size(); ++k)
                apply_update(m.layers[k], grad[k], scale);
        }

        if (progress) {
            const double n = static_cast<double>(pairs.pairs.size());
            TrainProgress p;
            p.phase = "finetune";
            p.epoch = epoch + 1;
            p.mean_loss = sum_loss / n;
            p.mean_cosine = sum_cos / n;
            p.mean_mse = sum_sq / n * 0.5;  // per-branch mean
            progress(p);
        }
    }
}

void save_model(const SiameseModel& m, const std::string& path) {
    ByteWriter w;
    w.magic(kModelMagic);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(m.layers.size()));
    for (const LayerParams& l : m.layers) {
        w.u32(static_cast<std::uint32_t>(l.fan_in));
        w.u32(static_cast<std::uint32_t>(l.fan_out));
    }
    w.f64(m.alpha);
    w.f64(m.corruption_finetune);
    for (const LayerParams& l : m.layers) {
        for (double v : l.weights) w.f64(v);
        for (double v : l.b_enc) w.f64(v);
        for (double v : l.b_dec) w.f64(v);
    }
    write_file_atomic(path, w.data());
}

SiameseModel load_model(const std::string& path) {
    ByteReader r(read_file_bytes(path));
    r.expect_magic(kModelMagic, path);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(version), r.offset() - 4);
    const std::uint32_t depth = r.u32();
    if (depth == 0) throw FormatError("model with zero layers", r.offset() - 4);

    SiameseModel m;
    m.layers.resize(depth);
    for (LayerParams& l : m.layers) {
        l.fan_in = r.u32();
        l.fan_out = r.u32();
        if (l.fan_in == 0 || l.fan_out == 0)
            throw FormatError("zero layer dimension", r.offset() - 4);
    }
    for (std::size_t k = 1; k < depth; ++k)
        if (m.layers[k].fan_in != m.layers[k - 1].fan_out)
            throw FormatError("layer dims do not chain", 12);
    m.alpha = r.f64();
    m.corruption_finetune = r.f64();
    for (LayerParams& l : m.layers) {
        l.weights.resize(l.fan_in * l.fan_out);
        for (double& v : l.weights) v = r.f64();
        l.b_enc.resize(l.fan_out);
        for (double& v : l.b_enc) v = r.f64();
        l.b_dec.resize(l.fan_in);
        for (double& v : l.b_dec) v = r.f64();
    }
    r.expect_end(path);
    return m;
}

}  // namespace vxw
