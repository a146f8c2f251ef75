#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "senti/image.hpp"

namespace senti {

enum class EdgeBackendId { sobel, learned };

std::string_view to_string(EdgeBackendId id) noexcept;
/// Throws InvalidArgument for unknown names.
EdgeBackendId parse_edge_backend(std::string_view name);

/// Single-channel structural signature, max-normalized into [0, 1].
struct EdgeMap {
  GrayTensor map;

  int height() const noexcept { return map.height(); }
  int width() const noexcept { return map.width(); }
  friend bool operator==(const EdgeMap&, const EdgeMap&) = default;
};

/// Side length both operands are resized to before retrieval SSIM.
inline constexpr int kRetrievalSize = 256;

/// A learned detector returns an unnormalized response at the input's
/// resolution; edge_response() applies the shared max-normalization.
using LearnedEdgeDetector = std::function<GrayTensor(const ImageTensor&)>;

/// Installs the process-wide learned backend. Passing an empty function
/// removes it again.
void set_learned_edge_detector(LearnedEdgeDetector detector);
bool learned_edge_detector_available();

/// 3x3 Sobel gradient magnitude with replicated borders (unnormalized).
GrayTensor sobel_magnitude(const GrayTensor& gray);

/// Scales so the maximum becomes 1; an all-zero map stays all-zero.
void normalize_max(GrayTensor& map);

/// Throws BackendUnavailable for `learned` when no detector is installed.
EdgeMap edge_response(const ImageTensor& img, EdgeBackendId backend = EdgeBackendId::sobel);

/// The edge map used for retrieval: the image is resized to
/// kRetrievalSize x kRetrievalSize, edges are extracted, and the result is
/// snapped to the 8-bit grid it is persisted with, so query-side and stored
/// signatures are directly comparable.
EdgeMap retrieval_signature(const ImageTensor& img, EdgeBackendId backend);

}  // namespace senti
