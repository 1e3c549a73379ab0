// network.hpp -- tied-weight stacked denoising autoencoder with siamese
// fine-tuning.
//
// Both siamese branches are the same object: one parameter set evaluated
// twice. Every layer k holds an encoder matrix W_k plus separate encoder and
// decoder biases; the decoder matrix is W_k transposed (tied weights), so it
// is never materialized. All activations are logistic sigmoids.
//
// The pair loss for clean patches (x1, x2) with corrupted inputs (c1, c2):
//
//   L = alpha * (mse(x1, dec(enc(c1))) + mse(x2, dec(enc(c2))))
//       - (1 - alpha) * cos(enc(c1), enc(c2))
//
// where enc() is the full encoder to the middle layer, dec() the mirrored
// decoder, and mse() the per-component mean squared error. The normalization
// keeps the two terms on comparable scales for any patch size, which is what
// makes the alpha tradeoff meaningful. Gradients are closed-form; each
// shared parameter receives the sum of both branches' contributions.
#ifndef VXW_NETWORK_HPP
#define VXW_NETWORK_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vxw/patch.hpp"

namespace vxw {

struct LayerParams {
    std::size_t fan_in = 0, fan_out = 0;
    std::vector<double> weights;  // fan_out x fan_in, row-major
    std::vector<double> b_enc;    // fan_out
    std::vector<double> b_dec;    // fan_in

    double& w(std::size_t out, std::size_t in) { return weights[out * fan_in + in]; }
    double w(std::size_t out, std::size_t in) const { return weights[out * fan_in + in]; }

    bool operator==(const LayerParams&) const = default;
};

struct SiameseModel {
    std::vector<LayerParams> layers;  // encoder order, e.g. 81 -> 64 -> 32
    double alpha = 0.66;              // reconstruction/cosine tradeoff
    double corruption_finetune = 0.1;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().fan_in; }
    std::size_t code_dim() const { return layers.empty() ? 0 : layers.back().fan_out; }

    bool operator==(const SiameseModel&) const = default;
};

struct SgdConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
};

// One line per epoch: mean per-pair (or per-example) loss, mean cosine of
// the corrupted-input representations (0 during pretraining), and mean
// per-component reconstruction MSE.
struct TrainProgress {
    std::string phase;  // "pretrain-1", "pretrain-2", "finetune"
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double mean_cosine = 0.0;
    double mean_mse = 0.0;
};
using ProgressFn = std::function<void(const TrainProgress&)>;

std::string progress_line(const TrainProgress& p);

// Single-layer forward helpers. layer_encode applies sigmoid(W x + b_enc);
// layer_decode applies sigmoid(W^T h + b_dec).
std::vector<double> layer_encode(const LayerParams& l, std::span<const double> x);
std::vector<double> layer_decode(const LayerParams& l, std::span<const double> h);

// Middle-layer representation of x (sigmoid chain through every layer).
std::vector<double> encode(const SiameseModel& m, std::span<const double> x);

// Full autoencoder pass: encode to the middle layer, then mirror back down
// through the tied decoder. Output length equals the input length.
std::vector<double> reconstruct(const SiameseModel& m, std::span<const double> x);

double pair_loss(const SiameseModel& m, std::span<const double> x1, std::span<const double> x2,
                 std::span<const double> x1_corrupted, std::span<const double> x2_corrupted);

// Gradient of pair_loss with respect to every parameter, in layer order.
// loss/cosine/recon report the forward values of the same evaluation.
struct PairGradient {
    std::vector<LayerParams> layers;  // same shapes as the model, gradient values
    double loss = 0.0;
    double cosine = 0.0;
    double recon = 0.0;  // mse(x1, x1_hat) + mse(x2, x2_hat)
};

PairGradient pair_loss_grad(const SiameseModel& m, std::span<const double> x1,
                            std::span<const double> x2, std::span<const double> x1_corrupted,
                            std::span<const double> x2_corrupted);

// Trains one denoising autoencoder layer with plain mini-batch SGD on the
// squared reconstruction error of corrupted inputs against clean inputs.
// Corruption is re-drawn per presentation, keyed by (seed, epoch, example),
// so the result does not depend on traversal internals.
LayerParams pretrain_layer(const std::vector<std::vector<double>>& inputs, std::size_t fan_out,
                           double corruption_rate, const SgdConfig& sgd,
                           const ProgressFn& progress = {}, const std::string& phase = "pretrain");

// Greedy layer-wise pretraining: layer k trains on the encoded outputs of
// layers < k. Layer k uses seed sgd.seed + k, so widths=[w] reproduces
// pretrain_layer exactly.
SiameseModel pretrain_stack(const std::vector<std::vector<double>>& inputs,
                            const std::vector<std::size_t>& widths,
                            const std::vector<double>& corruption_rates, const SgdConfig& sgd,
                            const ProgressFn& progress = {});

// SGD on the pair loss over the batch; the single shared parameter set is
// updated with summed branch gradients. Uses m.alpha and
// m.corruption_finetune.
void finetune(SiameseModel& m, const PairBatch& pairs, const SgdConfig& sgd,
              const ProgressFn& progress = {});

// Model container: magic "VXWM" | u32 version | u32 layer count
// | per-layer u32 fan_in, u32 fan_out | f64 alpha | f64 corruption_finetune
// | per-layer f64 weights (row-major), b_enc, b_dec.
void save_model(const SiameseModel& m, const std::string& path);
SiameseModel load_model(const std::string& path);

}  // namespace vxw

#endif
