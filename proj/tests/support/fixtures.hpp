#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "senti/backbone.hpp"
#include "senti/image.hpp"
#include "senti/weights.hpp"

namespace fixture {

inline constexpr std::uint64_t kWeightSeed = 0;

const senti::WeightArchive& seeded_archive(senti::BackboneId id);

template <typename T>
const senti::Backbone<T>& seeded_backbone(senti::BackboneId id);

/// Directory holding <backbone>.safetensors (+ sidecar) for both backbones,
/// written once per build tree.
std::filesystem::path weights_dir();

/// Fresh empty directory under the build tree.
std::filesystem::path scratch_dir(const std::string& name);

std::filesystem::path desk_dir();

/// Uniform noise in [0, 1].
senti::ImageTensor random_image(int h, int w, std::uint64_t seed);
senti::GrayTensor random_gray(int h, int w, std::uint64_t seed);
/// Low-frequency color pattern with a few hard edges; survives resampling.
senti::ImageTensor smooth_image(int h, int w, std::uint64_t seed);
/// smooth_image() plus low-amplitude noise. Flat regions produce exact ties
/// in max-pool windows, where the loss is not differentiable; gradient
/// checks use this instead.
senti::ImageTensor dithered_image(int h, int w, std::uint64_t seed);

/// Noun/adjective pairs of the published global-sentiment subsets.
const std::vector<std::pair<std::string, std::string>>& table_one_vocabulary();

}  // namespace fixture
