#pragma once

#include <string>
#include <vector>

#include "symco/export.hpp"

namespace symco::svg {

/// Kinds emit_svg understands and the artifact kind each one reads.
///   heatmap, dendrogram -> dendrogram
///   loadings            -> lpca
///   embedding           -> embedding
///   aligned             -> aligned (one panel per embedded stratum)
std::vector<std::string> kinds();

/// Renders a JSON artifact. Output depends only on the artifact, so equal
/// inputs give byte-identical SVG. Throws std::invalid_argument for an unknown
/// kind, a mismatched artifact or an empty embedding.
std::string emit_svg(const artifact::json& a, const std::string& kind);

}  // namespace symco::svg
