#include "qla/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace qla {

void write_path_csv(std::ostream& os, const SamplePath& path, long rep, bool header) {
  const int d = static_cast<int>(path.x.cols());
  const int m = static_cast<int>(path.y.cols());
  if (header) {
    if (rep >= 0) os << "rep,";
    os << "t";
    for (int i = 1; i <= d; ++i) os << ",x_" << i;
    for (int i = 1; i <= m; ++i) os << ",y_" << i;
    os << "\n";
  }
  os << std::setprecision(17);
  for (int k = 0; k <= path.n; ++k) {
    if (rep >= 0) os << rep << ",";
    os << path.t(k);
    for (int i = 0; i < d; ++i) os << "," << path.x(k, i);
    for (int i = 0; i < m; ++i) os << "," << path.y(k, i);
    os << "\n";
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Observations ingest_csv_stream(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("ingest_csv: empty file " + name);
  const auto header = split_line(line);

  int t_col = -1;
  std::vector<int> x_cols, y_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "t") t_col = static_cast<int>(i);
    else if (header[i].rfind("x_", 0) == 0) x_cols.push_back(static_cast<int>(i));
    else if (header[i].rfind("y_", 0) == 0) y_cols.push_back(static_cast<int>(i));
  }
  if (t_col < 0) throw FormatError("ingest_csv: missing t column in " + name);
  if (x_cols.empty()) throw FormatError("ingest_csv: missing x_* columns in " + name);
  if (y_cols.empty()) throw FormatError("ingest_csv: missing y_* columns in " + name);

  std::vector<double> t;
  std::vector<std::vector<double>> xrows, yrows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw FormatError("ingest_csv: ragged row in " + name);
    t.push_back(std::stod(cells[t_col]));
    std::vector<double> xr, yr;
    for (int c : x_cols) xr.push_back(std::stod(cells[c]));
    for (int c : y_cols) yr.push_back(std::stod(cells[c]));
    xrows.push_back(std::move(xr));
    yrows.push_back(std::move(yr));
  }
  if (t.size() < 2) throw FormatError("ingest_csv: need at least 2 rows in " + name);

  const int n = static_cast<int>(t.size()) - 1;
  const double T = t.back() - t.front();
  const double h = T / n;
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  for (int k = 0; k <= n; ++k) {
    if (std::abs(t[k] - (t.front() + k * h)) > tol)
      throw GridError("ingest_csv: non-uniform or non-increasing t grid in " + name);
  }
  if (!(h > 0.0)) throw GridError("ingest_csv: t grid is not increasing in " + name);

  Observations obs;
  obs.n = n;
  obs.T = T;
  obs.h = h;
  obs.x.resize(n + 1, static_cast<int>(x_cols.size()));
  obs.y.resize(n + 1, static_cast<int>(y_cols.size()));
  for (int k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < x_cols.size(); ++i) obs.x(k, static_cast<int>(i)) = xrows[k][i];
    for (std::size_t i = 0; i < y_cols.size(); ++i) obs.y(k, static_cast<int>(i)) = yrows[k][i];
  }
  obs.provenance = Observations::Provenance::ingested;
  obs.source = name;
  obs.validate();
  return obs;
}

Observations ingest_csv(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw FormatError("ingest_csv: cannot open " + filename);
  return ingest_csv_stream(in, filename);
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("atomic_write: cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace qla
