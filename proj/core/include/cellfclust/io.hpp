#pragma once

#include <iosfwd>
#include <string>

#include "cellfclust/types.hpp"

namespace cellfclust {

struct CsvOptions {
  std::string na_token = "NA";
  char delimiter = ',';
};

/// Reads a delimited table with a header row. NA cells become missing.
/// Throws DataError on ragged rows, empty input or non-numeric cells.
DataSet ingest(const std::string& path, const CsvOptions& options = {});
DataSet ingest(std::istream& in, const CsvOptions& options = {});

/// Writes a DataSet with header, %.17g values and the NA token for missing cells.
void write_csv(std::ostream& out, const DataSet& data, const CsvOptions& options = {});

/// Optional robust standardization (median / MAD per column, MAD floored at
/// 1e-12) followed by division of every value by the scale factor S. Larger
/// S shrinks the data, raises the fitted densities and therefore the share
/// of hard assignments.
DataSet preprocess(const DataSet& data, bool robust_standardize, double scale);

/// %.17g formatting.
std::string format_double(double v);

}  // namespace cellfclust
