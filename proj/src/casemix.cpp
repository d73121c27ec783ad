#include "samplan/casemix.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "samplan/rng.hpp"

namespace samplan {

int CaseMix::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].name == name) return static_cast<int>(j);
  return -1;
}

void CaseMix::validate() const {
  if (rows.cols() != static_cast<Eigen::Index>(columns.size()))
    throw SchemaError("case-mix: declared " + std::to_string(columns.size()) +
                      " columns but matrix has " + std::to_string(rows.cols()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      double v = rows(i, j);
      if (!std::isfinite(v))
        throw SchemaError("case-mix: non-finite value at row " + std::to_string(i + 1) +
                          ", column '" + columns[j].name + "'");
      const auto kind = columns[j].kind;
      if ((kind == ColumnKind::binary || kind == ColumnKind::dummy) && v != 0.0 && v != 1.0)
        throw SchemaError("case-mix: column '" + columns[j].name + "' declared " +
                          (kind == ColumnKind::binary ? "binary" : "dummy") +
                          " but row " + std::to_string(i + 1) + " holds " + std::to_string(v));
    }
  // Dummies of one categorical are mutually exclusive per row.
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].kind == ColumnKind::dummy && !columns[j].parent.empty())
      groups[columns[j].parent].push_back(static_cast<Eigen::Index>(j));
  for (const auto& [parent, cols] : groups) {
    if (cols.size() < 2) continue;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index j : cols) s += rows(i, j);
      if (s > 1.0)
        throw SchemaError("case-mix: dummies of '" + parent + "' not mutually exclusive at row " +
                          std::to_string(i + 1));
    }
  }
  if (subgroup && column_index(*subgroup) < 0)
    throw SchemaError("case-mix: subgroup column '" + *subgroup + "' not present");
}

CaseMix CaseMix::take_rows(const std::vector<std::int64_t>& idx) const {
  CaseMix out;
  out.columns = columns;
  out.subgroup = subgroup;
  out.rows.resize(static_cast<Eigen::Index>(idx.size()), rows.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.rows.row(static_cast<Eigen::Index>(r)) = rows.row(idx[r]);
  return out;
}

void MarginalSpec::validate() const {
  for (const auto& m : columns) {
    if (m.dist == Marginal::Dist::normal && !(m.sd > 0.0))
      throw ConfigError("marginal '" + m.name + "': sd must be > 0");
    if (m.dist == Marginal::Dist::bernoulli && !(m.prob > 0.0 && m.prob < 1.0))
      throw ConfigError("marginal '" + m.name + "': prob must be in (0,1)");
    if (m.dist == Marginal::Dist::empirical && m.values.empty())
      throw ConfigError("marginal '" + m.name + "': empirical source is empty");
  }
  if (noise_extra < 0) throw ConfigError("noise_extra must be >= 0");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

CaseMix ingest_casemix(const std::string& file_path, const std::vector<ColumnSpec>& schema,
                       const std::optional<std::string>& subgroup) {
  std::ifstream in(file_path);
  if (!in) throw ConfigError("cannot open case-mix file: " + file_path);

  std::string header;
  if (!std::getline(in, header)) throw ParseError(file_path + ": empty file");
  auto names = split_csv_line(header);
  std::unordered_map<std::string, int> pos;
  for (std::size_t j = 0; j < names.size(); ++j) pos[trim(names[j])] = static_cast<int>(j);

  std::vector<int> file_col(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto it = pos.find(schema[j].name);
    if (it == pos.end())
      throw SchemaError(file_path + ": missing column '" + schema[j].name + "' in header");
    file_col[j] = it->second;
  }

  std::vector<std::vector<double>> data;
  std::string line;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    std::vector<double> row(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (file_col[j] >= static_cast<int>(cells.size()))
        throw ParseError(file_path + ": line " + std::to_string(lineno) + " has too few cells");
      std::string cell = trim(cells[file_col[j]]);
      if (cell.empty())
        throw ParseError(file_path + ": missing value at line " + std::to_string(lineno) +
                         ", column '" + schema[j].name + "' (missing data not supported)");
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size())
        throw ParseError(file_path + ": non-numeric cell '" + cell + "' at line " +
                         std::to_string(lineno) + ", column '" + schema[j].name + "'");
      row[j] = v;
    }
    data.push_back(std::move(row));
  }

  CaseMix cm;
  cm.columns = schema;
  cm.subgroup = subgroup;
  cm.rows.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(schema.size()));
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < schema.size(); ++j)
      cm.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
  cm.validate();
  return cm;
}

CaseMix synthesize_casemix(const MarginalSpec& spec, std::int64_t n_rows, std::uint64_t rng_seed) {
  spec.validate();
  if (n_rows < 1) throw ConfigError("synthesize_casemix: n_rows must be >= 1");

  CaseMix cm;
  const auto P = static_cast<Eigen::Index>(spec.columns.size()) + spec.noise_extra;
  cm.rows.resize(n_rows, P);
  cm.subgroup = spec.subgroup;

  for (std::size_t j = 0; j < spec.columns.size(); ++j) {
    const auto& m = spec.columns[j];
    ColumnSpec cs;
    cs.name = m.name;
    cs.kind = m.dist == Marginal::Dist::bernoulli ? ColumnKind::binary : ColumnKind::continuous;
    cm.columns.push_back(cs);
    auto stream = make_stream(rng_seed, j, Role::synthesis);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n_rows; ++i) {
      double u = stream.uniform_at(static_cast<std::uint64_t>(i));
      double v = 0.0;
      switch (m.dist) {
        case Marginal::Dist::normal: {
          // Second uniform for Box-Muller, addressed in the upper index range.
          double u2 = stream.uniform_at((1ull << 62) | static_cast<std::uint64_t>(i));
          double r = std::sqrt(-2.0 * std::log(1.0 - u));
          v = m.mean + m.sd * r * std::cos(6.283185307179586476925286766559 * u2);
          break;
        }
        case Marginal::Dist::bernoulli:
          v = u < m.prob ? 1.0 : 0.0;
          break;
        case Marginal::Dist::empirical:
          v = m.values[static_cast<std::size_t>(u * static_cast<double>(m.values.size()))];
          break;
      }
      cm.rows(i, static_cast<Eigen::Index>(j)) = v;
    }
  }

  for (int k = 0; k < spec.noise_extra; ++k) {
    ColumnSpec cs;
    cs.name = "noise_" + std::to_string(k + 1);
    cs.kind = ColumnKind::continuous;
    cm.columns.push_back(cs);
    auto stream = make_stream(rng_seed, spec.columns.size() + static_cast<std::size_t>(k), Role::synthesis);
    const auto col = static_cast<Eigen::Index>(spec.columns.size()) + k;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n_rows; ++i) {
      double u = stream.uniform_at(static_cast<std::uint64_t>(i));
      double u2 = stream.uniform_at((1ull << 62) | static_cast<std::uint64_t>(i));
      double r = std::sqrt(-2.0 * std::log(1.0 - u));
      cm.rows(i, col) = r * std::cos(6.283185307179586476925286766559 * u2);
    }
  }

  cm.validate();
  return cm;
}

CaseMix append_noise_columns(const CaseMix& base, int k, std::uint64_t rng_seed) {
  if (k < 0) throw ConfigError("append_noise_columns: k must be >= 0");
  CaseMix out;
  out.subgroup = base.subgroup;
  out.columns = base.columns;
  int existing = 0;
  for (const auto& c : base.columns)
    if (c.name.rfind("noise_", 0) == 0) ++existing;
  out.rows.resize(base.rows.rows(), base.rows.cols() + k);
  out.rows.leftCols(base.rows.cols()) = base.rows;
  for (int j = 0; j < k; ++j) {
    ColumnSpec cs;
    cs.name = "noise_" + std::to_string(existing + j + 1);
    cs.kind = ColumnKind::continuous;
    out.columns.push_back(cs);
    auto stream = make_stream(rng_seed, static_cast<std::uint64_t>(j) + 101, Role::synthesis);
    const auto col = base.rows.cols() + j;
    const std::int64_t n = base.rows.rows();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double u = stream.uniform_at(static_cast<std::uint64_t>(i));
      double u2 = stream.uniform_at((1ull << 62) | static_cast<std::uint64_t>(i));
      double r = std::sqrt(-2.0 * std::log(1.0 - u));
      out.rows(i, col) = r * std::cos(6.283185307179586476925286766559 * u2);
    }
  }
  return out;
}

}  // namespace samplan
