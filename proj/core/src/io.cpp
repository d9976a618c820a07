#include "cellfclust/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cellfclust/error.hpp"
#include "cellfclust/robust.hpp"

namespace cellfclust {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DataSet ingest(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split(line, options.delimiter);
      break;
    }
  }
  if (header.empty()) throw DataError("input is empty: expected a header row");

  const auto J = static_cast<Index>(header.size());
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, options.delimiter);
    if (static_cast<Index>(fields.size()) != J) {
      std::ostringstream os;
      os << "line " << line_no << " has " << fields.size() << " fields, header has " << J;
      throw DataError(os.str());
    }
    std::vector<double> row(static_cast<std::size_t>(J));
    std::vector<bool> obs(static_cast<std::size_t>(J), true);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      if (f == options.na_token) {
        row[j] = std::numeric_limits<double>::quiet_NaN();
        obs[j] = false;
        continue;
      }
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (first != last && *first == '+') ++first;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        std::ostringstream os;
        os << "cannot parse '" << f << "' at row " << rows.size() + 1 << ", column " << j + 1
           << " (line " << line_no << ")";
        throw DataError(os.str());
      }
      row[j] = v;
    }
    rows.push_back(std::move(row));
    seen.push_back(std::move(obs));
  }
  if (rows.empty()) throw DataError("input has a header but no data rows");

  const auto n = static_cast<Index>(rows.size());
  MatrixXd values(n, J);
  BoolMatrix observed(n, J);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < J; ++j) {
      values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      observed(i, j) = seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  DataSet data(std::move(values), std::move(observed), std::move(header));
  data.validate();
  return data;
}

DataSet ingest(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest(in, options);
}

void write_csv(std::ostream& out, const DataSet& data, const CsvOptions& options) {
  for (Index j = 0; j < data.J(); ++j) {
    if (j) out << options.delimiter;
    if (static_cast<Index>(data.variable_names.size()) == data.J())
      out << data.variable_names[static_cast<std::size_t>(j)];
    else
      out << 'X' << j + 1;
  }
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.J(); ++j) {
      if (j) out << options.delimiter;
      if (data.observed(i, j))
        out << format_double(data.values(i, j));
      else
        out << options.na_token;
    }
    out << '\n';
  }
}

DataSet preprocess(const DataSet& data, bool robust_standardize, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale factor must be positive");
  DataSet out = data;
  for (Index j = 0; j < data.J(); ++j) {
    double center = 0.0;
    double spread = 1.0;
    if (robust_standardize) {
      std::vector<double> vals;
      for (Index i = 0; i < data.n(); ++i)
        if (data.observed(i, j)) vals.push_back(data.values(i, j));
      if (!vals.empty()) {
        center = median(vals);
        spread = mad(vals);
        if (!(spread > 0.0)) spread = 1e-12;
      }
    }
    for (Index i = 0; i < data.n(); ++i)
      if (data.observed(i, j)) out.values(i, j) = (data.values(i, j) - center) / spread / scale;
  }
  return out;
}

}  // namespace cellfclust
