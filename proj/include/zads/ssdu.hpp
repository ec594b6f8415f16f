#pragma once

#include <cstdint>

#include "zads/mri_model.hpp"

namespace zads {

/// Disjoint partition of the acquired columns: theta drives data consistency,
/// lambda is held out for the self-supervised loss.
struct SsduSplit {
  SamplingMask theta;
  SamplingMask lambda;
  double rho = 0.0;
  std::uint64_t seed = 0;
};

/// Draws round(rho * |mask|) held-out columns uniformly from the non-ACS
/// sampled columns. ACS columns always stay in theta. Throws InfeasibleSplit
/// when the request rounds to zero columns or exceeds the non-ACS supply.
SsduSplit split(const SamplingMask& mask, double rho, std::uint64_t seed);

/// Zeroes every column outside `m` and relabels the mask. `m` must be a
/// subset of the acquired columns.
MultiCoilKSpace restrict_kspace(const MultiCoilKSpace& y, const SamplingMask& m);

}  // namespace zads
