#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "senti/backbone.hpp"
#include "senti/corpus.hpp"
#include "senti/image.hpp"
#include "senti/ssim.hpp"

namespace senti {

enum class RetrievalStrategy { ssim_edge, perceptual };

std::string_view to_string(RetrievalStrategy s) noexcept;
/// Accepts "ssim-edge" and "perceptual".
RetrievalStrategy parse_retrieval_strategy(std::string_view name);

struct SentimentQuery {
  ImageTensor input;
  std::string noun;
  std::string adjective;
  RetrievalStrategy strategy = RetrievalStrategy::ssim_edge;
  int top_k = 1;
};

struct RankedEntry {
  std::string id;
  /// SSIM for ssim-edge (higher is closer), feature distance for perceptual
  /// (lower is closer).
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RetrievalResult {
  RetrievalStrategy strategy = RetrievalStrategy::ssim_edge;
  std::vector<RankedEntry> ranked;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Entries whose normalized tags equal the normalized query, in index order.
std::vector<CorpusEntry> select_subset(const CorpusIndex& index, std::string_view noun,
                                       std::string_view adjective);

struct RetrievalOptions {
  /// Required for the perceptual strategy.
  const Backbone<float>* backbone = nullptr;
  /// 0 picks the hardware concurrency. The result does not depend on it.
  unsigned threads = 0;
  SsimParams ssim;
};

/// Scores the tag-matching subset and returns the best `top_k`. Ties are
/// broken by entry id. Throws NoCandidates when no entry carries the pair and
/// BackendUnavailable for perceptual ranking without a backbone (or for an
/// index built with an edge backend that is not installed).
RetrievalResult retrieve_reference(const CorpusIndex& index, const SentimentQuery& query,
                                   const RetrievalOptions& options = {});

/// Mean over the five taps of the squared difference between features that
/// are scaled to unit length along the channel axis at every position. Both
/// images are resized to kRetrievalSize x kRetrievalSize first.
double perceptual_distance(const Backbone<float>& backbone, const ImageTensor& a, const ImageTensor& b);

/// {"strategy": ..., "ranked": [{"id": ..., "score": ...}, ...]}
nlohmann::json to_json(const RetrievalResult& result);

}  // namespace senti
