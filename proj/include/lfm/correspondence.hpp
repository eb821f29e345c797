#pragma once

#include "lfm/common.hpp"
#include "lfm/embedio.hpp"

#include <string>
#include <vector>

namespace lfm {

/// Point map from X nodes to Y nodes. Entry -1 marks an unassigned node.
struct Correspondence {
  enum class Source { anchors, extracted, ground_truth };

  std::vector<Index> assignment;
  Source source = Source::extracted;
  Index n_target = 0;

  Index n() const { return static_cast<Index>(assignment.size()); }
  Index assigned() const;
  bool total() const { return assigned() == n(); }

  /// Bounds check; with `require_total` every node must be assigned.
  void validate(bool require_total) const;

  static Correspondence identity(Index n, Source source = Source::ground_truth);
  /// Partial map holding only the anchor pairs.
  static Correspondence from_anchors(const AnchorSet& anchors, Index n_src, Index n_dst);
  AnchorSet to_anchors() const;
};

std::string to_string(Correspondence::Source s);
Correspondence::Source parse_correspondence_source(const std::string& s);

/// Fraction of `truth`-assigned nodes where `c` agrees with `truth`.
double correspondence_accuracy(const Correspondence& c, const Correspondence& truth);

}  // namespace lfm
