#include "core/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "core/rng.hpp"

namespace xma {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_row(const std::string& line, int row_number) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const char* tok = p;
    while (p < end && *p != ',') ++p;
    const char* tok_end = p;
    while (tok_end > tok && (tok_end[-1] == ' ' || tok_end[-1] == '\t' ||
                             tok_end[-1] == '\r'))
      --tok_end;
    double v = 0.0;
    const auto res = std::from_chars(tok, tok_end, v);
    if (res.ec != std::errc{} || res.ptr != tok_end)
      throw std::runtime_error("non-numeric entry '" +
                               std::string(tok, tok_end) + "' in row " +
                               std::to_string(row_number));
    out.push_back(v);
    if (p < end) ++p;  // skip comma
  }
  return out;
}

int parse_header_field(const std::string& header, const std::string& key) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos)
    throw std::runtime_error("snapshot header missing '" + key + "='");
  int v = 0;
  const char* start = header.data() + pos + key.size() + 1;
  const auto res = std::from_chars(start, header.data() + header.size(), v);
  if (res.ec != std::errc{})
    throw std::runtime_error("snapshot header has invalid '" + key + "'");
  return v;
}

SnapshotSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot file: " + path);

  std::string header;
  if (!std::getline(in, header) || header.empty())
    throw std::runtime_error("empty snapshot file: " + path);
  const int p = parse_header_field(header, "p");
  const int n_dof = parse_header_field(header, "n_dof");
  const int d = parse_header_field(header, "d");
  if (p < 1 || n_dof < 1 || d < 1 || d > 2)
    throw std::runtime_error("snapshot header out of range: " + header);

  std::vector<std::vector<double>> rows;
  std::string line;
  int row_number = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_number;
    auto row = parse_row(line, row_number);
    if (static_cast<int>(row.size()) != p + n_dof)
      throw std::runtime_error(
          "dimension mismatch in row " + std::to_string(row_number) +
          ": expected " + std::to_string(p + n_dof) + " values, got " +
          std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::runtime_error("snapshot file has no data rows: " + path);

  const std::string gpath = grid_path_for(path);
  std::ifstream gin(gpath);
  if (!gin) throw std::runtime_error("cannot open grid file: " + gpath);
  std::vector<std::vector<double>> grid_rows;
  int grow = 0;
  while (std::getline(gin, line)) {
    if (line.empty() || line == "\r") continue;
    ++grow;
    auto row = parse_row(line, grow);
    if (static_cast<int>(row.size()) != d)
      throw std::runtime_error("dimension mismatch in grid row " +
                               std::to_string(grow));
    grid_rows.push_back(std::move(row));
  }
  if (static_cast<int>(grid_rows.size()) != n_dof)
    throw std::runtime_error("grid file has " +
                             std::to_string(grid_rows.size()) +
                             " rows, expected n_dof=" + std::to_string(n_dof));

  SnapshotSet set;
  const int n = static_cast<int>(rows.size());
  set.params.resize(n, p);
  set.fields.resize(n_dof, n);
  set.grid.resize(n_dof, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) set.params(i, j) = rows[i][j];
    for (int k = 0; k < n_dof; ++k) set.fields(k, i) = rows[i][p + k];
  }
  for (int k = 0; k < n_dof; ++k)
    for (int j = 0; j < d; ++j) set.grid(k, j) = grid_rows[k][j];
  return set;
}

void write_csv(const SnapshotSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write snapshot file: " + path);
  out << "p=" << set.n_params() << ",n_dof=" << set.n_dof()
      << ",d=" << set.dim() << "\n";
  for (int i = 0; i < set.n_snapshots(); ++i) {
    for (int j = 0; j < set.n_params(); ++j) {
      if (j) out << ",";
      out << format_real(set.params(i, j));
    }
    for (int k = 0; k < set.n_dof(); ++k)
      out << "," << format_real(set.fields(k, i));
    out << "\n";
  }
  const std::string gpath = grid_path_for(path);
  std::ofstream gout(gpath);
  if (!gout) throw std::runtime_error("cannot write grid file: " + gpath);
  for (int k = 0; k < set.n_dof(); ++k) {
    for (int j = 0; j < set.dim(); ++j) {
      if (j) gout << ",";
      gout << format_real(set.grid(k, j));
    }
    gout << "\n";
  }
}

SnapshotSet load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
  nlohmann::json j;
  in >> j;
  const auto params = j.at("params");
  const auto grid = j.at("grid");
  const auto fields = j.at("fields");
  if (params.empty() || fields.empty() || params.size() != fields.size())
    throw std::runtime_error("snapshot json: params/fields size mismatch");

  const int n = static_cast<int>(params.size());
  const int p = static_cast<int>(params[0].size());
  const int n_dof = static_cast<int>(grid.size());
  const int d = static_cast<int>(grid[0].size());

  SnapshotSet set;
  set.params.resize(n, p);
  set.fields.resize(n_dof, n);
  set.grid.resize(n_dof, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(params[i].size()) != p ||
        static_cast<int>(fields[i].size()) != n_dof)
      throw std::runtime_error("dimension mismatch in row " +
                               std::to_string(i + 1));
    for (int k = 0; k < p; ++k) set.params(i, k) = params[i][k].get<double>();
    for (int k = 0; k < n_dof; ++k)
      set.fields(k, i) = fields[i][k].get<double>();
  }
  for (int k = 0; k < n_dof; ++k) {
    if (static_cast<int>(grid[k].size()) != d)
      throw std::runtime_error("dimension mismatch in grid row " +
                               std::to_string(k + 1));
    for (int j = 0; j < d; ++j) set.grid(k, j) = grid[k][j].get<double>();
  }
  if (j.contains("norm")) {
    const auto& nj = j.at("norm");
    set.norm.shift = nj.at("shift").get<double>();
    set.norm.scale = nj.at("scale").get<double>();
    set.norm.zero_variance = nj.at("zero_variance").get<bool>();
    set.norm.applied = nj.at("applied").get<bool>();
  }
  return set;
}

void write_json(const SnapshotSet& set, const std::string& path) {
  nlohmann::json j;
  j["p"] = set.n_params();
  j["n_dof"] = set.n_dof();
  j["d"] = set.dim();
  auto& params = j["params"] = nlohmann::json::array();
  for (int i = 0; i < set.n_snapshots(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < set.n_params(); ++k) row.push_back(set.params(i, k));
    params.push_back(std::move(row));
  }
  auto& grid = j["grid"] = nlohmann::json::array();
  for (int k = 0; k < set.n_dof(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < set.dim(); ++c) row.push_back(set.grid(k, c));
    grid.push_back(std::move(row));
  }
  auto& fields = j["fields"] = nlohmann::json::array();
  for (int i = 0; i < set.n_snapshots(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < set.n_dof(); ++k) row.push_back(set.fields(k, i));
    fields.push_back(std::move(row));
  }
  j["norm"] = {{"shift", set.norm.shift},
               {"scale", set.norm.scale},
               {"zero_variance", set.norm.zero_variance},
               {"applied", set.norm.applied}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write snapshot file: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace

Eigen::VectorXd AxisScaler::apply(const Eigen::VectorXd& x) const {
  return (x - lo).cwiseQuotient(span);
}

Eigen::MatrixXd AxisScaler::apply_rows(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd out = rows;
  out.rowwise() -= lo.transpose();
  out.array().rowwise() /= span.transpose().array();
  return out;
}

AxisScaler fit_scaler(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw std::invalid_argument("fit_scaler: empty input");
  AxisScaler s;
  s.lo = rows.colwise().minCoeff();
  Eigen::VectorXd hi = rows.colwise().maxCoeff();
  s.span = hi - s.lo;
  for (Eigen::Index i = 0; i < s.span.size(); ++i)
    if (s.span(i) <= 0.0) s.span(i) = 1.0;
  return s;
}

std::string grid_path_for(const std::string& csv_path) {
  const auto dot = csv_path.find_last_of('.');
  const auto slash = csv_path.find_last_of("/\\");
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return csv_path + ".grid";
  return csv_path.substr(0, dot) + ".grid" + csv_path.substr(dot);
}

SnapshotSet load_snapshots(const std::string& path, SnapshotFormat format) {
  SnapshotSet set = format == SnapshotFormat::csv ? load_csv(path)
                                                  : load_json(path);
  if (!set.params.allFinite() || !set.fields.allFinite() ||
      !set.grid.allFinite())
    throw std::runtime_error("snapshot file contains non-finite values: " +
                             path);
  return set;
}

void write_snapshots(const SnapshotSet& set, const std::string& path,
                     SnapshotFormat format) {
  if (format == SnapshotFormat::csv)
    write_csv(set, path);
  else
    write_json(set, path);
}

SplitIndices split(const SnapshotSet& set, int n_train, int n_eval,
                   int n_test, std::uint64_t seed) {
  const int n = set.n_snapshots();
  if (n_train < 0 || n_eval < 0 || n_test < 0 ||
      n_train + n_eval + n_test != n)
    throw std::invalid_argument(
        "split: counts (" + std::to_string(n_train) + "," +
        std::to_string(n_eval) + "," + std::to_string(n_test) +
        ") do not sum to the set size " + std::to_string(n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.eval.assign(order.begin() + n_train, order.begin() + n_train + n_eval);
  out.test.assign(order.begin() + n_train + n_eval, order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.eval.begin(), out.eval.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SnapshotSet normalize(const SnapshotSet& set,
                      const std::vector<int>& train_indices) {
  if (set.n_snapshots() == 0)
    throw std::invalid_argument("normalize: empty snapshot set");
  if (set.norm.applied)
    throw std::invalid_argument("normalize: set is already normalized");
  if (train_indices.empty())
    throw std::invalid_argument("normalize: no train indices");

  double sum = 0.0;
  for (int idx : train_indices) sum += set.fields.col(idx).sum();
  const double shift =
      sum / (static_cast<double>(train_indices.size()) * set.n_dof());

  double dev = 0.0;
  for (int idx : train_indices)
    dev = std::max(dev,
                   (set.fields.col(idx).array() - shift).abs().maxCoeff());

  SnapshotSet out = set;
  out.norm.shift = shift;
  out.norm.zero_variance = dev == 0.0;
  out.norm.scale = out.norm.zero_variance ? 1.0 : dev;
  out.norm.applied = true;
  out.fields = (set.fields.array() - shift) / out.norm.scale;
  return out;
}

SnapshotSet denormalize(const SnapshotSet& set) {
  if (!set.norm.applied)
    throw std::invalid_argument("denormalize: set is not normalized");
  SnapshotSet out = set;
  out.fields = set.fields.array() * set.norm.scale + set.norm.shift;
  out.norm.applied = false;
  return out;
}

Eigen::VectorXd normalize_field(const NormSpec& norm,
                                const Eigen::VectorXd& field) {
  return (field.array() - norm.shift) / norm.scale;
}

Eigen::VectorXd denormalize_field(const NormSpec& norm,
                                  const Eigen::VectorXd& field) {
  return field.array() * norm.scale + norm.shift;
}

}  // namespace xma
