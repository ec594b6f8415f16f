#include "zads/ssdu.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zads/errors.hpp"
#include "zads/kernels.hpp"
#include "zads/rng.hpp"

namespace zads {

SsduSplit split(const SamplingMask& mask, double rho, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("ssdu split: rho must lie in (0, 1)");
  if (mask.count() == 0) throw InvalidArgument("ssdu split: empty sampling mask");

  std::vector<int> acs = mask.acs_lines();
  std::vector<int> candidates;
  for (int l : mask.lines())
    if (!std::binary_search(acs.begin(), acs.end(), l)) candidates.push_back(l);

  const auto held_out = static_cast<std::size_t>(std::lround(rho * static_cast<double>(mask.count())));
  if (held_out == 0)
    throw InfeasibleSplit("ssdu split: rho * |Omega| rounds to zero held-out lines");
  if (held_out > candidates.size())
    throw InfeasibleSplit("ssdu split: " + std::to_string(held_out) + " held-out lines requested but only " +
                          std::to_string(candidates.size()) + " non-ACS lines are sampled");

  // partial Fisher-Yates
  Rng rng(derive_seed(seed, 0x53534455));  // "SSDU"
  for (std::size_t i = 0; i < held_out; ++i) {
    const std::size_t j = i + rng.uniform_int(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<int> lambda(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(held_out));
  std::sort(lambda.begin(), lambda.end());
  std::vector<int> theta;
  for (int l : mask.lines())
    if (!std::binary_search(lambda.begin(), lambda.end(), l)) theta.push_back(l);

  return SsduSplit{SamplingMask(mask.width(), std::move(theta), mask.acceleration(), mask.acs()),
                   SamplingMask(mask.width(), std::move(lambda), mask.acceleration(), 0), rho, seed};
}

MultiCoilKSpace restrict_kspace(const MultiCoilKSpace& y, const SamplingMask& m) {
  if (m.width() != y.width) throw DimensionMismatch("restrict_kspace: mask width mismatch");
  if (!m.is_subset_of(y.mask))
    throw InvalidArgument("restrict_kspace: mask selects columns that were not acquired");
  MultiCoilKSpace out = y;
  out.mask = m;
  kernels::parallel::mask_columns(out.data, y.height, y.width, m.column_flags());
  return out;
}

}  // namespace zads
