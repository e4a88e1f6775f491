#pragma once

// Near-duplicate state merging: exact structural merging first, then
// context-aware merging of similar states whose neighbours are also similar.

#include "stgnav/capture.hpp"
#include "stgnav/stg.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stgnav {

inline constexpr double kDefaultSimilarityThreshold = 0.9;

enum class MergePass { signature, context };

std::string_view to_string(MergePass pass);

struct MergeCluster {
  std::string representative;
  /// Members other than the representative, sorted.
  std::vector<std::string> merged;

  bool operator==(const MergeCluster&) const = default;
};

struct MergeReport {
  std::vector<MergeCluster> clusters;
  MergePass pass = MergePass::signature;
  std::optional<double> similarity_threshold;

  bool operator==(const MergeReport&) const = default;
};

struct MergeResult {
  StgGraph graph;
  MergeReport report;
};

/// (kind, resource_id) of one tree node; the unit of similarity.
struct ComponentKey {
  ComponentKind kind;
  std::optional<std::string> resource_id;

  auto operator<=>(const ComponentKey&) const = default;
};

std::vector<ComponentKey> component_keys(const ComponentNode& root);

/// Multiset Jaccard index |A ∩ B| / |A ∪ B|. Two empty multisets score 1.
double jaccard(std::span<const ComponentKey> a, std::span<const ComponentKey> b);

/// Jaccard index over the (kind, resource_id) multisets of both trees.
double similarity(const StateNode& a, const StateNode& b);

/// Merges states (within one activity) whose content-stripped signatures are
/// equal. The lexicographically smallest id represents each cluster.
MergeResult signature_merge(const StgGraph& graph);

/// Merges same-activity states with similarity >= threshold that also have a
/// similar predecessor pair and a similar successor pair, until no pair
/// qualifies. Throws ErrorCode::parameter unless 0 < threshold <= 1.
MergeResult context_merge(const StgGraph& graph, double threshold);

/// Collapses each cluster of `clusters` (member -> representative) into its
/// representative. Edges are re-pointed and identical transitions collapse to
/// the smallest action id.
StgGraph apply_merge(const StgGraph& graph, const std::map<std::string, std::string>& representative_of);

Json merge_report_document(const MergeReport& report);

}  // namespace stgnav
