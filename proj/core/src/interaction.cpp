#include "lepf/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lepf/errors.hpp"

namespace lepf {

std::string to_string(SchemeKind kind) { return kind == SchemeKind::kLepf ? "lepf" : "ibpf"; }

SchemeKind parse_scheme_kind(const std::string& text) {
  if (text == "lepf" || text == "LEPF") return SchemeKind::kLepf;
  if (text == "ibpf" || text == "IBPF") return SchemeKind::kIbpf;
  throw ValidationError("unknown scheme '" + text + "' (expected lepf or ibpf)");
}

InteractionScheme InteractionScheme::lepf(int group_size, int theta) {
  if (group_size < 2) throw ValidationError("LEPF requires M >= 2");
  if (theta < 1 || theta > group_size - 1) {
    throw ValidationError("LEPF requires 1 <= theta <= M-1 (got theta=" + std::to_string(theta) +
                          ", M=" + std::to_string(group_size) + ")");
  }
  return {SchemeKind::kLepf, group_size, theta};
}

InteractionScheme InteractionScheme::ibpf(int group_size) {
  if (group_size < 1) throw ValidationError("IBPF requires M >= 1");
  return {SchemeKind::kIbpf, group_size, 0};
}

std::string InteractionScheme::describe() const {
  std::string out = to_string(kind_) + "(M=" + std::to_string(group_size_);
  if (kind_ == SchemeKind::kLepf) out += ", theta=" + std::to_string(theta_);
  return out + ")";
}

AlphaMatrix::AlphaMatrix(Label size, std::vector<std::vector<AlphaEntry>> rows)
    : AlphaMatrix(size, 1, std::move(rows)) {}

AlphaMatrix::AlphaMatrix(Label size, Label stride, std::vector<std::vector<AlphaEntry>> rows)
    : size_(size), stride_(stride), rows_(std::move(rows)) {
  if (size_ < 1) throw ValidationError("alpha matrix must be at least 1x1");
  if (stride_ < 1 || size_ % stride_ != 0 || rows_.size() != static_cast<std::size_t>(size_ / stride_)) {
    throw ValidationError("alpha matrix row count mismatch");
  }
  for (auto& row : rows_) {
    for (const auto& e : row) {
      if (e.column < 1 || e.column > size_) throw ValidationError("alpha column label out of range");
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) throw ValidationError("alpha weights must be >= 0");
    }
    std::sort(row.begin(), row.end(), [](const AlphaEntry& a, const AlphaEntry& b) { return a.column < b.column; });
  }
}

AlphaMatrix AlphaMatrix::with_shared_rows(Label size, Label stride, std::vector<std::vector<AlphaEntry>> shared_rows) {
  return AlphaMatrix(size, stride, std::move(shared_rows));
}

const std::vector<AlphaEntry>& AlphaMatrix::row(Label i) const {
  if (i < 1 || i > size_) throw ValidationError("alpha row label " + std::to_string(i) + " out of range");
  return rows_[static_cast<std::size_t>((i - 1) / stride_)];
}

double AlphaMatrix::weight(Label i, Label j) const {
  double total = 0.0;
  for (const auto& e : row(i)) {
    if (e.column == j) total += e.weight;
  }
  return total;
}

Eigen::MatrixXd AlphaMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size_, size_);
  for (Label i = 1; i <= size_; ++i) {
    for (const auto& e : row(i)) out(i - 1, e.column - 1) += e.weight;
  }
  return out;
}

AlphaMatrix AlphaMatrix::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) throw ValidationError("alpha matrix must be square");
  std::vector<std::vector<AlphaEntry>> rows(static_cast<std::size_t>(dense.rows()));
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) rows[static_cast<std::size_t>(i)].push_back({j + 1, dense(i, j)});
    }
  }
  return AlphaMatrix(dense.rows(), std::move(rows));
}

AlphaMatrix build_alpha(const InteractionScheme& scheme, int groups) {
  if (groups < 1) throw ValidationError("number of groups m must be >= 1");
  const Label m_size = scheme.group_size();
  const Label n = m_size * groups;
  const double w = 1.0 / static_cast<double>(m_size);
  // Row i depends on i only through its block, so one row per group is stored.
  std::vector<std::vector<AlphaEntry>> rows(static_cast<std::size_t>(groups));
  for (Label b = 0; b < groups; ++b) {
    auto& row = rows[static_cast<std::size_t>(b)];
    row.reserve(static_cast<std::size_t>(m_size));
    for (Label r = 1; r <= m_size; ++r) row.push_back({cmod(b * m_size + r + scheme.theta(), n), w});
  }
  return AlphaMatrix::with_shared_rows(n, m_size, std::move(rows));
}

double alpha_formula(const InteractionScheme& scheme, Label size, Label i, Label j) {
  const Label m_size = scheme.group_size();
  const bool hit = block_of(i, m_size) == floor_div(cmod(j - scheme.theta(), size) - 1, m_size);
  return hit ? 1.0 / static_cast<double>(m_size) : 0.0;
}

Label delta_metric(Label i, Label j, Label size) {
  const Label d = ((i - j) % size + size) % size;
  return std::min(d, size - d);
}

Window alpha_infinity_row(const InteractionScheme& scheme, Label i) {
  const Label m_size = scheme.group_size();
  return {block_of(i, m_size) * m_size + scheme.theta() + 1, scheme.group_size(),
          1.0 / static_cast<double>(m_size)};
}

double alpha_infinity(const InteractionScheme& scheme, Label i, Label j) {
  const Window w = alpha_infinity_row(scheme, i);
  return w.contains(j) ? w.weight : 0.0;
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

AssumptionReport verify_assumptions(const AlphaMatrix& alpha, const InteractionScheme& scheme) {
  AssumptionReport report;
  const Label n = alpha.size();
  const Label m_size = scheme.group_size();
  const Label beta = scheme.band();
  const Eigen::MatrixXd a = alpha.dense();
  auto at = [&](Label i, Label j) { return a(i - 1, j - 1); };

  AssumptionCheck doubly{"doubly_stochastic", true, true, {}};
  for (Label i = 1; i <= n && doubly.passed; ++i) {
    const double s = a.row(i - 1).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      doubly.passed = false;
      doubly.witness = "row " + std::to_string(i) + " sums to " + fmt(s);
    }
  }
  for (Label j = 1; j <= n && doubly.passed; ++j) {
    const double s = a.col(j - 1).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      doubly.passed = false;
      doubly.witness = "column " + std::to_string(j) + " sums to " + fmt(s);
    }
  }
  report.checks.push_back(doubly);

  AssumptionCheck periodic{"periodic_shift", true, true, {}};
  if (n % m_size != 0) {
    periodic.passed = false;
    periodic.witness = "N=" + std::to_string(n) + " is not a multiple of M=" + std::to_string(m_size);
  } else {
    const Label groups = n / m_size;
    for (Label i = 1; i <= n && periodic.passed; ++i) {
      for (Label j = 1; j <= n && periodic.passed; ++j) {
        for (Label z = 1; z <= groups; ++z) {
          const double shifted = at(cmod(i + z * m_size, n), cmod(j + z * m_size, n));
          if (std::abs(at(i, j) - shifted) > 1e-15) {
            periodic.passed = false;
            periodic.witness = "(i,j,z)=(" + std::to_string(i) + "," + std::to_string(j) + "," +
                               std::to_string(z) + ")";
            break;
          }
        }
      }
    }
  }
  report.checks.push_back(periodic);

  const bool wide_enough = n >= 2 * beta + 1;
  AssumptionCheck band{"band", true, true, {}};
  AssumptionCheck limit{"limit_consistency", true, true, {}};
  if (!wide_enough) {
    band.applicable = limit.applicable = false;
    band.witness = limit.witness = "requires N >= 2*beta+1 = " + std::to_string(2 * beta + 1);
  } else {
    for (Label i = 1; i <= n && band.passed; ++i) {
      for (Label j = 1; j <= n; ++j) {
        if (delta_metric(i, j, n) > beta && at(i, j) != 0.0) {
          band.passed = false;
          band.witness = "(i,j)=(" + std::to_string(i) + "," + std::to_string(j) + ") has weight " +
                         fmt(at(i, j)) + " at distance " + std::to_string(delta_metric(i, j, n));
          break;
        }
      }
    }
    for (Label i = -2 * n; i <= 2 * n && limit.passed; ++i) {
      for (Label j = i - beta - m_size; j <= i + beta + m_size; ++j) {
        const double expected = std::abs(i - j) <= beta ? at(cmod(i, n), cmod(j, n)) : 0.0;
        if (std::abs(alpha_infinity(scheme, i, j) - expected) > 1e-15) {
          limit.passed = false;
          limit.witness = "(i,j)=(" + std::to_string(i) + "," + std::to_string(j) + ")";
          break;
        }
      }
      // Outside |i - j| <= beta + M both sides vanish unless alpha_infinity has
      // support there, which is checked separately.
      const Window w = alpha_infinity_row(scheme, i);
      if (limit.passed && (w.first < i - beta || w.first + w.size - 1 > i + beta)) {
        limit.passed = false;
        limit.witness = "limiting row " + std::to_string(i) + " leaves the band";
      }
    }
  }
  report.checks.push_back(band);
  report.checks.push_back(limit);
  return report;
}

AlphaMatrix parse_alpha_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ValidationError("alpha file: bad number '" + field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw ValidationError("alpha file is empty");
  Eigen::MatrixXd dense(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw ValidationError("alpha file: row " + std::to_string(i + 1) + " does not have N entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) dense(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return AlphaMatrix::from_dense(dense);
}

AlphaMatrix load_alpha_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open alpha file '" + path + "'");
  return parse_alpha_matrix(in);
}

}  // namespace lepf
