#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lepf {

/// Particle labels and indices of the limiting chain. Labels of an N-particle
/// system run over 1..N; the limiting matrix is indexed by all integers.
using Label = std::int64_t;

/// Floor division for possibly negative numerators.
constexpr Label floor_div(Label a, Label b) noexcept {
  const Label q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

/// y cmod x := y - floor((y - 1) / x) x, taking values in 1..x.
constexpr Label cmod(Label y, Label x) noexcept { return y - floor_div(y - 1, x) * x; }

/// Block (group) of a label: floor((i - 1) / M). Group k in 0-based terms
/// holds labels kM+1..kM+M.
constexpr Label block_of(Label i, Label group_size) noexcept { return floor_div(i - 1, group_size); }

enum class SchemeKind { kLepf, kIbpf };

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& text);

/// Interaction pattern of the local exchange filter (shift theta between
/// neighbouring groups) or of independent bootstrap filters.
class InteractionScheme {
 public:
  static InteractionScheme lepf(int group_size, int theta);
  static InteractionScheme ibpf(int group_size);

  SchemeKind kind() const noexcept { return kind_; }
  int group_size() const noexcept { return group_size_; }
  /// Exchange shift; 0 for IBPF.
  int theta() const noexcept { return theta_; }
  /// Half band width: M - 1 + theta for LEPF, M - 1 for IBPF.
  int band() const noexcept { return group_size_ - 1 + theta_; }

  std::string describe() const;

  friend bool operator==(const InteractionScheme&, const InteractionScheme&) = default;

 private:
  InteractionScheme(SchemeKind kind, int group_size, int theta)
      : kind_(kind), group_size_(group_size), theta_(theta) {}

  SchemeKind kind_;
  int group_size_;
  int theta_;
};

struct AlphaEntry {
  Label column;
  double weight;
};

/// Sparse row-stochastic N x N interaction matrix indexed by labels 1..N.
class AlphaMatrix {
 public:
  /// Rows indexed 1..N; rows[i-1] lists the nonzero entries of row i.
  AlphaMatrix(Label size, std::vector<std::vector<AlphaEntry>> rows);

  /// Matrix whose rows are shared by consecutive runs of `stride` labels:
  /// row i is shared_rows[(i-1) / stride].
  static AlphaMatrix with_shared_rows(Label size, Label stride, std::vector<std::vector<AlphaEntry>> shared_rows);

  Label size() const noexcept { return size_; }
  const std::vector<AlphaEntry>& row(Label i) const;
  double weight(Label i, Label j) const;

  /// Dense copy, rows and columns 0-based. Intended for small test sizes.
  Eigen::MatrixXd dense() const;

  static AlphaMatrix from_dense(const Eigen::MatrixXd& dense);

 private:
  AlphaMatrix(Label size, Label stride, std::vector<std::vector<AlphaEntry>> rows);

  Label size_;
  Label stride_;
  std::vector<std::vector<AlphaEntry>> rows_;
};

/// The N = M m matrix of the scheme: row i puts weight 1/M on the M labels j
/// whose shifted label (j - theta) cmod N lies in the block of i.
AlphaMatrix build_alpha(const InteractionScheme& scheme, int groups);

/// Entry of the defining indicator formula, evaluated directly (no sparsity).
double alpha_formula(const InteractionScheme& scheme, Label size, Label i, Label j);

/// Cyclic distance min_l |i - j + l N|.
Label delta_metric(Label i, Label j, Label size);

/// Support of row i of the limiting doubly infinite matrix: labels
/// first..first+M-1, each with weight 1/M.
struct Window {
  Label first;
  int size;
  double weight;
  bool contains(Label j) const noexcept { return j >= first && j < first + size; }
};

Window alpha_infinity_row(const InteractionScheme& scheme, Label i);
double alpha_infinity(const InteractionScheme& scheme, Label i, Label j);

struct AssumptionCheck {
  std::string name;
  bool applicable = true;
  bool passed = true;
  std::string witness;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
};

/// Checks, for an N x N matrix and the scheme it is meant to realize:
///   doubly_stochastic   row and column sums equal to one;
///   periodic_shift      invariance under shifting both labels by z M, z = 1..m;
///   band                zero outside the cyclic band of half width beta;
///   limit_consistency   the limiting matrix equals the periodic extension of
///                       alpha, truncated to |i - j| <= beta, on [-2N, 2N]^2.
/// The last two require N >= 2 beta + 1 and are marked not applicable otherwise.
AssumptionReport verify_assumptions(const AlphaMatrix& alpha, const InteractionScheme& scheme);

/// Dense matrix file: one row per line, comma-separated weights, '#' comments.
AlphaMatrix parse_alpha_matrix(std::istream& in);
AlphaMatrix load_alpha_matrix(const std::string& path);

}  // namespace lepf
