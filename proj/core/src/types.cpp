#include "cellfclust/types.hpp"

#include <cmath>
#include <sstream>

#include "cellfclust/error.hpp"

namespace cellfclust {

DataSet::DataSet(MatrixXd v, std::vector<std::string> names)
    : values(std::move(v)), variable_names(std::move(names)) {
  observed = BoolMatrix::Constant(values.rows(), values.cols(), true);
}

DataSet::DataSet(MatrixXd v, BoolMatrix obs, std::vector<std::string> names)
    : values(std::move(v)), observed(std::move(obs)), variable_names(std::move(names)) {}

void DataSet::validate() const {
  if (values.rows() < 1 || values.cols() < 1) throw DataError("data set must have n >= 1 and J >= 1");
  if (observed.rows() != values.rows() || observed.cols() != values.cols())
    throw DataError("observed mask shape does not match the data");
  if (!variable_names.empty() && static_cast<Index>(variable_names.size()) != values.cols())
    throw DataError("number of variable names does not match J");
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      if (observed(i, j) && !std::isfinite(values(i, j))) {
        std::ostringstream os;
        os << "observed value at row " << i + 1 << ", column " << j + 1 << " is not finite";
        throw DataError(os.str());
      }
    }
  }
}

Index MembershipMatrix::argmax(Index i) const {
  Index best = 0;
  for (Index k = 1; k < u.cols(); ++k)
    if (u(i, k) > u(i, best)) best = k;
  return best;
}

std::vector<Index> MembershipMatrix::hard_labels() const {
  std::vector<Index> labels(static_cast<std::size_t>(u.rows()));
  for (Index i = 0; i < u.rows(); ++i) labels[static_cast<std::size_t>(i)] = argmax(i);
  return labels;
}

void FitConfig::validate() const {
  if (K < 1) throw ConfigError("K must be a positive integer");
  if (!(alpha >= 0.0 && alpha <= 0.25)) throw ConfigError("alpha must lie in [0, 0.25]");
  if (!(c >= 1.0) || !std::isfinite(c)) throw ConfigError("c must be a finite value >= 1");
  if (!(m >= 1.0) || !std::isfinite(m)) throw ConfigError("fuzzifier m must be a finite value >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (n_starts < 1) throw ConfigError("n_starts must be positive");
  if (threads < 1) throw ConfigError("threads must be positive");
}

Index stable_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<Index>(r);
  return static_cast<Index>(std::ceil(x));
}

Index compute_h(Index n_observed, double alpha) {
  return stable_ceil((1.0 - alpha) * static_cast<double>(n_observed));
}

}  // namespace cellfclust
