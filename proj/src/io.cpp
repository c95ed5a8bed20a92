#include "robreg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace robreg {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataFormatError("line " + std::to_string(line_no) + ": column " + column + ": '" + s +
                          "' is not a finite number");
  return v;
}

}  // namespace

LabelledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) header = split(line);
  }
  if (header.empty()) throw DataFormatError("empty file: expected a header row");
  const bool has_source = header.back() == "source";
  const std::size_t numeric = header.size() - (has_source ? 1 : 0);
  if (numeric < 1) throw DataFormatError("line " + std::to_string(line_no) + ": no response column");

  std::vector<std::vector<double>> rows;
  std::vector<Source> source;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DataFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(cells.size()));
    std::vector<double> r;
    for (std::size_t k = 0; k < numeric; ++k) r.push_back(parse_number(cells[k], line_no, header[k]));
    rows.push_back(std::move(r));
    if (has_source) {
      if (cells.back() == "M1") source.push_back(Source::M1);
      else if (cells.back() == "M2") source.push_back(Source::M2);
      else throw DataFormatError("line " + std::to_string(line_no) + ": source must be M1 or M2");
    }
  }
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(numeric);  // intercept replaces y
  if (n <= p)
    throw DataFormatError("need more rows than coefficients: n = " + std::to_string(n) + ", p = " +
                          std::to_string(p));
  LabelledDataset out;
  out.carriers.assign(header.begin() + 1, header.begin() + static_cast<std::ptrdiff_t>(numeric));
  out.data.y.resize(n);
  out.data.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    out.data.y(i) = r[0];
    out.data.X(i, 0) = 1.0;
    for (Index j = 1; j < p; ++j) out.data.X(i, j) = r[static_cast<std::size_t>(j)];
  }
  out.data.source = std::move(source);
  return out;
}

LabelledDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_dataset_csv(in);
}

void write_fit_table(const LabelledDataset& d, const std::map<Method, MethodRun>& runs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << "row,y";
  for (const auto& c : d.carriers) out << ',' << c;
  out << ",method,flag,residual\n";
  for (const auto& [m, run] : runs) {
    if (run.error) continue;
    const Vector r = run.fit.residuals(d.data);
    for (Index i = 0; i < d.data.n(); ++i) {
      out << i << ',' << format_double(d.data.y(i));
      for (Index j = 1; j < d.data.p(); ++j) out << ',' << format_double(d.data.X(i, j));
      out << ',' << to_string(m) << ',' << (run.flags[static_cast<std::size_t>(i)] ? 1 : 0) << ','
          << format_double(r(i)) << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace robreg
