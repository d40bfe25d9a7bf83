#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octo/instance_norm.hpp"
#include "octo/layers.hpp"
#include "octo/quantize.hpp"
#include "octo/tensor.hpp"

namespace octo {

enum class EncoderArch : uint8_t { Conv = 0, Mlp = 1 };
enum class CodebookTraining : uint8_t { Gradient = 0, Ema = 1 };
enum class FineTuneMode : uint8_t { EncoderDecoderOnly = 0, CodebookEmaOnly = 1, Both = 2 };

struct DvqaeSpec {
    EncoderArch arch = EncoderArch::Conv;
    std::vector<int64_t> input_shape = {1, 32, 32};  // [C,H,W]
    int64_t grid_h = 8, grid_w = 8, embed_dim = 64;
    std::vector<int64_t> hidden = {8, 16};  // conv channel widths / mlp widths
    int64_t codebook_size = 256;
    int64_t group_count = 1;
    int64_t slice_count = 1;
    double ema_decay = 0.99;
    double alpha = 1.0, beta = 0.25, lambda = 0.01;
    double in_epsilon = 1e-5;
    bool use_instance_norm = true;
    CodebookTraining codebook_training = CodebookTraining::Gradient;
};

// Encoder -> instance norm -> vector quantization -> (+ private residual) ->
// decoder. The latent grid is cell-major [H,W,M]; conv stacks run
// channel-major [M,H,W], converted by the transpose helpers below.
struct DvqaeModel {
    DvqaeSpec spec;
    LayerStack encoder;
    InstanceNorm in_layer;
    vq::Codebook codebook;
    LayerStack decoder;

    // gradient-path state for the atoms (Eq-1 style codebook loss)
    Tensor atom_grad;
    AdamState atom_adam;

    bool codebook_ready() const { return codebook.atom_count() > 0; }
    int64_t param_count() const;
    std::vector<Parameter*> net_parameters();  // encoder + IN + decoder
};

DvqaeModel build_dvqae(const DvqaeSpec& spec, uint64_t seed);

// [n,C,H,W] <-> [n,H,W,C] (also accepts unbatched 3-d tensors)
Tensor chw_to_grid(const Tensor& x);
Tensor grid_to_chw(const Tensor& g);

// z_e = IN(encoder(x)), returned cell-major. x may be batched.
Tensor encode(const DvqaeModel& model, const Tensor& x);

struct SampleGroup {
    std::vector<Tensor> samples;  // same shape, one shared private class
    int32_t private_class = 0;
};

// Eq-5 split: public part per sample via the quantizer, private part as the
// mean residual z_e - z_q over all samples and grid cells of the group.
struct LatentSplit {
    std::vector<vq::QuantizeResult> quantized;  // public component per sample
    Tensor private_mean;                        // [M]
    Tensor per_sample_residual;                 // [T, M], pre-averaging
};

LatentSplit split_latent(const DvqaeModel& model, const SampleGroup& group);

// x_hat = D(z_q + broadcast(private_vec))
Tensor decode_one(const DvqaeModel& model, const vq::QuantizeResult& zq, const Tensor& private_vec);
std::vector<Tensor> decode(const DvqaeModel& model, const LatentSplit& split);

struct PrivateVariant {
    enum class Kind { Zeroed, Perturbed, Replaced } kind = Kind::Zeroed;
    double noise_sigma = 0.0;  // Perturbed
    uint64_t seed = 0;         // Perturbed
    Tensor replacement;        // Replaced, length M
};

std::vector<Tensor> reconstruct_private_variant(const DvqaeModel& model, const LatentSplit& split,
                                                const PrivateVariant& variant);

struct LossBreakdown {
    double total = 0.0;
    double reconstruction = 0.0;
    double latent = 0.0;      // lambda * mean||IN(z_e) - z_q||^2
    double codebook = 0.0;    // alpha term (gradient-trained codebooks only)
    double commitment = 0.0;  // beta term (gradient-trained codebooks only)
};

LossBreakdown total_loss(const DvqaeModel& model, const SampleGroup& group);

struct TrainSpec {
    int64_t steps = 2000;
    int64_t batch_size = 100;
    double lr = 0.001;
};

struct TrainReport {
    std::vector<double> losses;
    bool diverged = false;
    int64_t steps_run = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// Minibatch Adam on the total loss; groups are formed inside each batch by
// private label. Initializes the codebook from encoded data when empty.
TrainReport train_global(DvqaeModel& model, const struct GroupedDataset& data,
                         const TrainSpec& spec, uint64_t seed);

struct FineTuneSpec {
    int64_t epochs = 1;  // "one-shot"
    int64_t batch_size = 32;
    double lr = 0.001;
};

// EncoderDecoderOnly keeps the codebook bit-identical; CodebookEmaOnly
// touches only EMA state and atoms; Both does each per batch.
TrainReport fine_tune_local(DvqaeModel& model, const struct GroupedDataset& data, FineTuneMode mode,
                            const FineTuneSpec& spec, uint64_t seed);

// Collects encoded cell vectors and samples K of them as initial atoms.
void init_codebook_from_data(DvqaeModel& model, const struct GroupedDataset& data, uint64_t seed);

// One shared training step; exposed for the simulator's "both" mode.
LossBreakdown train_step(DvqaeModel& model, const std::vector<const Tensor*>& batch,
                         const std::vector<int32_t>& private_labels, double lr,
                         bool update_encoder_decoder, bool update_codebook);

// Binary model container ("OCTM"): spec, encoder, IN, codebook, decoder.
std::vector<uint8_t> serialize_model(const DvqaeModel& model);
DvqaeModel deserialize_model(const uint8_t* data, size_t len);
void save_model(const DvqaeModel& model, const std::string& path);
DvqaeModel load_model(const std::string& path);

}  // namespace octo
