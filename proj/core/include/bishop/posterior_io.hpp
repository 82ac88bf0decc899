#pragma once

#include <string>

#include "bishop/sampler.hpp"

namespace bishop {

/// One JSON object per draw:
/// {"chain", "draw", "params": {name: value}, "stats": {...}}.
std::string posterior_to_ndjson(const PosteriorDraws& draws);

/// Throws ValidationError naming the offending line for malformed input,
/// inconsistent parameter names, or chains of unequal length.
PosteriorDraws posterior_from_ndjson(const std::string& text);

/// Wide table: chain, draw, every parameter, then the sampler statistics.
std::string posterior_to_csv(const PosteriorDraws& draws);

}  // namespace bishop
