#pragma once

#include <cstdint>
#include <vector>

#include "cellfclust/types.hpp"

namespace cellfclust {

struct InitialState {
  CellIndicator w0;
  ClusterParams params0;
  MembershipMatrix u0;
  /// Units drawn for each seed group (diagnostic).
  std::vector<std::vector<Index>> seed_units;
};

/// Per column, keeps the h cells with the smallest robust |z| reliable.
CellIndicator marginal_indicator(const DataSet& data, double alpha);

/// Builds a feasible starting point: marginal robust indicator, K random
/// seed groups of J + 1 units (2 when the data are too small), equal weights,
/// truncated covariances and memberships from the resulting fit matrix.
InitialState initialize(const DataSet& data, const FitConfig& config, std::uint64_t start_seed);

}  // namespace cellfclust
