#pragma once

#include <vector>

namespace cellfclust {

/// Median of a non-empty sample (mean of the two middle values for even sizes).
double median(std::vector<double> values);

/// Unscaled median absolute deviation around the median.
double mad(const std::vector<double>& values);

}  // namespace cellfclust
