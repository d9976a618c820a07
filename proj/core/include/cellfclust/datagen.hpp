#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cellfclust/types.hpp"

namespace cellfclust {

/// variance * rho^|i-j|, or an explicit matrix when provided.
struct CovarianceSpec {
  double rho = 0.0;
  double variance = 1.0;
  std::optional<MatrixXd> explicit_matrix;

  MatrixXd build(Index J) const;
};

struct SyntheticSpec {
  std::string name;
  Index n = 0;
  Index J = 0;
  int K = 0;
  std::vector<double> proportions;
  std::vector<VectorXd> means;
  std::vector<CovarianceSpec> covariances;
  /// Per-variable contamination rate, in [0, 0.25].
  std::vector<double> contamination_rate;
  double low = -50.0;
  double high = 50.0;
  /// Explicit (unit, variable) plants, 0-based.
  std::vector<std::pair<Index, Index>> overrides;
  std::uint64_t seed = 1;

  /// Throws SpecError.
  void validate() const;
};

struct SyntheticData {
  DataSet data;
  std::vector<Index> true_labels;
  BoolMatrix true_outlier_mask;
  MatrixXd clean_values;
};

SyntheticData generate(const SyntheticSpec& spec);

enum class Preset { paper_design_1, paper_design_2, weights_demo };

SyntheticSpec preset(Preset which);
/// Throws SpecError for an unknown name.
SyntheticSpec preset(const std::string& name);

}  // namespace cellfclust
