#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "samplan/common.hpp"

namespace samplan {

enum class ColumnKind { continuous, binary, dummy };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::string parent;  // categorical name for dummy columns
};

// Predictor matrix of the target population / development pool. Immutable
// after construction; safe for shared read-only access across workers.
struct CaseMix {
  std::vector<ColumnSpec> columns;
  Eigen::MatrixXd rows;  // n_rows x P
  std::optional<std::string> subgroup;

  Eigen::Index n_rows() const { return rows.rows(); }
  Eigen::Index n_cols() const { return rows.cols(); }

  // Index of a named column, or -1.
  int column_index(const std::string& name) const;

  // Enforces the column invariants (binary/dummy in {0,1}, mutually
  // exclusive dummies, finite cells). Throws SchemaError.
  void validate() const;

  // Row subset, preserving order of `idx`.
  CaseMix take_rows(const std::vector<std::int64_t>& idx) const;
};

// Per-column marginal for synthetic case-mix generation.
struct Marginal {
  enum class Dist { normal, bernoulli, empirical };
  std::string name;
  Dist dist = Dist::normal;
  double mean = 0.0, sd = 1.0;  // normal
  double prob = 0.5;            // bernoulli
  std::vector<double> values;   // empirical: resampled with replacement
};

struct MarginalSpec {
  std::vector<Marginal> columns;
  int noise_extra = 0;  // appended standard-normal noise_1..noise_k columns
  std::optional<std::string> subgroup;

  void validate() const;
};

// Reads a CSV with a header row into a CaseMix. The header must contain
// every schema column (extra file columns are ignored); cells must be
// numeric and present. Errors carry 1-based row/column positions.
CaseMix ingest_casemix(const std::string& file_path, const std::vector<ColumnSpec>& schema,
                       const std::optional<std::string>& subgroup = std::nullopt);

// Independent per-column draws per the marginal spec, plus standard-normal
// noise columns named noise_1..noise_k.
CaseMix synthesize_casemix(const MarginalSpec& spec, std::int64_t n_rows, std::uint64_t rng_seed);

// Appends k standard-normal noise columns (noise_1..noise_k, continuing any
// existing numbering) to an existing case-mix; used by noise variants.
CaseMix append_noise_columns(const CaseMix& base, int k, std::uint64_t rng_seed);

}  // namespace samplan
