#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotex/tensor.hpp"

namespace rotex {

// One side of a classification problem: grayscale images in [0,1] with dense
// labels in [0, class_count).
struct DatasetSplit {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    std::vector<std::string> names;
    std::size_t class_count = 0;

    std::size_t size() const { return images.size(); }
    void validate() const;
};

struct Problem {
    DatasetSplit train;
    DatasetSplit test;
};

// Binary 8-bit PGM (P5), maxval <= 255, header comments tolerated.
Tensor load_pgm(const std::string& path);
void save_pgm(const Tensor& image, const std::string& path);  // clamps to [0,1], 8-bit

// Directory layout: <dir>/train.txt, <dir>/test.txt, images under <dir>/images/.
// Manifest: first line sample count, then one "filename label" pair per line.
Problem load_problem(const std::string& dir);
DatasetSplit load_manifest(const std::string& manifest_path, const std::string& image_dir);

// FNV-1a over pixels, labels and names; identifies dataset content in manifests.
std::uint64_t dataset_hash(const DatasetSplit& split);

// Analytic oriented texture: a mix of sinusoidal gratings evaluated per pixel,
// so rotated instances carry no resampling artifacts.
struct WaveComponent {
    double frequency = 0.25;  // cycles/pixel, must lie in (0, 0.5]
    double weight = 1.0;
    double phase = 0.0;  // orientation offset added to the instance orientation
};

struct SynthSpec {
    std::vector<WaveComponent> components;
    double orientation = 0.0;  // radians
    std::size_t size = 64;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

Tensor synth_texture(const SynthSpec& spec);

// The six default texture classes: three frequencies, each as a single
// grating and as a cross-hatched pair.
std::vector<std::vector<WaveComponent>> default_synth_classes();

// Class definitions from a JSON file:
// {"size": 64, "noise_std": 0.05,
//  "classes": [{"components": [{"frequency": .., "weight": .., "phase": ..}, ..]}, ..]}
struct SynthSet {
    std::vector<std::vector<WaveComponent>> classes;
    std::size_t size = 64;
    double noise_std = 0.05;
};
SynthSet default_synth_set();
SynthSet load_synth_set(const std::string& json_path);

// Sample a split from a synthetic set. fixed_orientation < 0 draws a uniform
// random orientation per image; otherwise every image uses the given angle.
DatasetSplit make_synth_split(const SynthSet& set, std::size_t per_class, double fixed_orientation,
                              std::uint64_t seed);

}  // namespace rotex
