#include "senti/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "senti/edges.hpp"
#include "senti/error.hpp"

namespace senti {

std::string_view to_string(RetrievalStrategy s) noexcept {
  return s == RetrievalStrategy::ssim_edge ? "ssim-edge" : "perceptual";
}

RetrievalStrategy parse_retrieval_strategy(std::string_view name) {
  if (name == "ssim-edge") return RetrievalStrategy::ssim_edge;
  if (name == "perceptual") return RetrievalStrategy::perceptual;
  fail(ErrorCode::InvalidArgument, "unknown retrieval strategy \"" + std::string(name) + "\"");
}

std::vector<CorpusEntry> select_subset(const CorpusIndex& index, std::string_view noun,
                                       std::string_view adjective) {
  const std::string n = normalize_tag(noun);
  const std::string a = normalize_tag(adjective);
  std::vector<CorpusEntry> out;
  for (const auto& e : index.entries)
    if (e.noun == n && e.adjective == a) out.push_back(e);
  return out;
}

namespace {

using Pyramid = FeaturePyramid<float>;

Pyramid unit_features(const Backbone<float>& backbone, const ImageTensor& img) {
  Pyramid f = extract_features(backbone, resize_to(img, kRetrievalSize, kRetrievalSize));
  for (auto& level : f.levels) {
    const std::size_t plane = level.plane();
    for (std::size_t p = 0; p < plane; ++p) {
      double sq = 0.0;
      for (int c = 0; c < level.channels(); ++c) {
        const double v = level.data()[c * plane + p];
        sq += v * v;
      }
      const double scale = 1.0 / (std::sqrt(sq) + 1e-10);
      for (int c = 0; c < level.channels(); ++c) level.data()[c * plane + p] *= static_cast<float>(scale);
    }
  }
  return f;
}

double unit_distance(const Pyramid& a, const Pyramid& b) {
  double total = 0.0;
  for (int i = 0; i < kTapCount; ++i) {
    const auto& x = a.levels[i];
    const auto& y = b.levels[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = static_cast<double>(x.data()[k]) - y.data()[k];
      acc += d * d;
    }
    total += acc / static_cast<double>(x.size());
  }
  return total / kTapCount;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double perceptual_distance(const Backbone<float>& backbone, const ImageTensor& a, const ImageTensor& b) {
  return unit_distance(unit_features(backbone, a), unit_features(backbone, b));
}

RetrievalResult retrieve_reference(const CorpusIndex& index, const SentimentQuery& query,
                                   const RetrievalOptions& options) {
  if (query.top_k < 1) fail(ErrorCode::InvalidArgument, "top_k must be >= 1");
  if (!query.input.is_valid()) fail(ErrorCode::InvalidArgument, "query image is not a valid image tensor");
  const auto subset = select_subset(index, query.noun, query.adjective);
  if (subset.empty())
    fail(ErrorCode::NoCandidates, "no entries tagged (" + normalize_tag(query.noun) + ", " +
                                      normalize_tag(query.adjective) + ")");

  std::vector<double> scores(subset.size());
  if (query.strategy == RetrievalStrategy::ssim_edge) {
    options.ssim.validate();
    const EdgeMap probe = retrieval_signature(query.input, index.edge_backend);
    parallel_for(subset.size(), options.threads, [&](std::size_t i) {
      scores[i] = ssim(probe.map, load_edge_map(index, subset[i]).map, options.ssim);
    });
  } else {
    if (!options.backbone) fail(ErrorCode::BackendUnavailable, "perceptual ranking needs a loaded backbone");
    const Pyramid probe = unit_features(*options.backbone, query.input);
    parallel_for(subset.size(), options.threads, [&](std::size_t i) {
      ImageTensor img;
      try {
        img = load_image(subset[i].path);
      } catch (const Error& e) {
        fail(ErrorCode::EntryImageError, subset[i].id + " (" + std::string(e.what()) + ")");
      }
      scores[i] = unit_distance(probe, unit_features(*options.backbone, img));
    });
  }

  RetrievalResult result;
  result.strategy = query.strategy;
  for (std::size_t i = 0; i < subset.size(); ++i) result.ranked.push_back({subset[i].id, scores[i]});
  const bool descending = query.strategy == RetrievalStrategy::ssim_edge;
  std::sort(result.ranked.begin(), result.ranked.end(), [descending](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return descending ? a.score > b.score : a.score < b.score;
    return a.id < b.id;
  });
  result.ranked.resize(std::min<std::size_t>(result.ranked.size(), static_cast<std::size_t>(query.top_k)));
  return result;
}

nlohmann::json to_json(const RetrievalResult& result) {
  auto ranked = nlohmann::json::array();
  for (const auto& r : result.ranked) ranked.push_back({{"id", r.id}, {"score", r.score}});
  return {{"strategy", std::string(to_string(result.strategy))}, {"ranked", ranked}};
}

}  // namespace senti
