#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octo/tensor.hpp"

namespace octo {

// Samples with a content label (the downstream task target) and a private
// label (the identity an adversary would try to recover). Labels are dense
// integers from 0.
struct GroupedDataset {
    std::vector<Tensor> samples;
    std::vector<int32_t> content_labels;
    std::vector<int32_t> private_labels;

    int64_t size() const { return static_cast<int64_t>(samples.size()); }
    int32_t content_class_count() const;
    int32_t private_class_count() const;
    void validate() const;

    GroupedDataset subset(const std::vector<int64_t>& indices) const;
};

// digits with a closed loop; the downstream task on digit data
inline int32_t digit_content_label(int32_t digit) {
    return (digit == 0 || digit == 6 || digit == 8 || digit == 9) ? 1 : 0;
}

// IDX containers (big-endian dims). Images are scaled to [0,1] and
// zero-padded (centered) to pad_to x pad_to when pad_to > 0. Content label
// is circle/no-circle, private label is the digit class.
GroupedDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                                int64_t pad_to = 32);

// Writes samples back as u8 IDX files (round-trips a pad_to=0 load exactly).
void write_idx_dataset(const GroupedDataset& ds, const std::string& images_path,
                       const std::string& labels_path);

// Controlled content/style generator: sample = orthogonal content prototype
// + channel-constant style shift + Gaussian noise. Channel-constant shifts
// are exactly removed by instance normalization, which gives the
// disentanglement checks an analytic ground truth. Content label = content
// class, private label = style class. Samples are [channels, side, side].
struct SynthSpec {
    int32_t content_classes = 4;
    int32_t style_classes = 4;
    int64_t samples_per_cell = 50;
    double noise_sigma = 0.05;
    int64_t channels = 4;
    int64_t side = 4;
    double style_magnitude = 1.0;
};

GroupedDataset synth_content_style(const SynthSpec& spec, uint64_t seed);

// Procedural digit glyphs (28x28 strokes, jittered, padded to 32x32):
// a self-contained stand-in for handwritten-digit IDX data. Private label =
// digit, content label = circle/no-circle.
struct DigitsSpec {
    int64_t count = 4000;
    double noise_sigma = 0.03;
    int64_t pad_to = 32;
};

GroupedDataset synth_digits(const DigitsSpec& spec, uint64_t seed);

// Tr/Te/ATD split, stratified by content label: test_fraction of everything
// is Te; atd_fraction of the remaining Tr becomes ATD; the rest goes to the
// distributed nodes.
struct SplitSpec {
    double train_fraction = 0.8;  // Te gets 1 - train_fraction
    double atd_fraction = 0.15;   // share of Tr
};

struct SplitResult {
    GroupedDataset train_nodes;
    GroupedDataset atd;
    GroupedDataset test;
};

SplitResult split_dataset(const GroupedDataset& ds, const SplitSpec& spec, uint64_t seed);

// sorted list of indices per private class
std::vector<std::vector<int64_t>> group_by_private_class(const GroupedDataset& ds);

}  // namespace octo
