#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "lepf/errors.hpp"
#include "lepf/hmm.hpp"

namespace lepf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int parse_int(std::string_view text, int line_no) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("line " + std::to_string(line_no) + ": expected an integer, got '" +
                          std::string(text) + "'");
  }
  return value;
}

Eigen::VectorXd parse_csv(std::string_view text, int line_no) {
  std::vector<double> values;
  std::istringstream in{std::string(text)};
  std::string field;
  while (std::getline(in, field, ',')) {
    const auto t = trim(field);
    try {
      std::size_t used = 0;
      const std::string token(t);
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(line_no) + ": bad number '" + std::string(t) + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

FiniteHmm parse_finite_hmm(std::istream& in) {
  std::optional<int> state_count;
  std::optional<Eigen::VectorXd> initial;
  std::map<int, Eigen::VectorXd> rows;
  std::optional<Eigen::VectorXd> shared_potential;
  std::map<int, Eigen::VectorXd> potentials;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "S") {
      state_count = parse_int(value, line_no);
    } else if (key == "pi0") {
      initial = parse_csv(value, line_no);
    } else if (key.starts_with("F.row")) {
      rows[parse_int(key.substr(5), line_no)] = parse_csv(value, line_no);
    } else if (key == "g") {
      shared_potential = parse_csv(value, line_no);
    } else if (key.starts_with("g")) {
      potentials[parse_int(key.substr(1), line_no)] = parse_csv(value, line_no);
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }

  if (!state_count || *state_count < 1) throw ValidationError("model file must set S >= 1");
  if (!initial) throw ValidationError("model file must set pi0");
  const int s = *state_count;
  if (initial->size() != s) throw ValidationError("pi0 must have S entries");
  Eigen::MatrixXd transition(s, s);
  for (int r = 0; r < s; ++r) {
    const auto it = rows.find(r);
    if (it == rows.end()) throw ValidationError("missing F.row" + std::to_string(r));
    if (it->second.size() != s) throw ValidationError("F.row" + std::to_string(r) + " must have S entries");
    transition.row(r) = it->second.transpose();
  }
  if (rows.size() != static_cast<std::size_t>(s)) throw ValidationError("F rows must be indexed 0..S-1");

  if (shared_potential && !potentials.empty()) {
    throw ValidationError("use either g= or g<n>=, not both");
  }
  if (shared_potential) return FiniteHmm(*initial, transition, *shared_potential);
  if (potentials.empty()) throw ValidationError("model file must set g or g<n>");
  std::vector<Eigen::VectorXd> sequence;
  for (int n = 0; n < static_cast<int>(potentials.size()); ++n) {
    const auto it = potentials.find(n);
    if (it == potentials.end()) throw ValidationError("missing g" + std::to_string(n));
    sequence.push_back(it->second);
  }
  return FiniteHmm(*initial, transition, std::move(sequence));
}

FiniteHmm load_finite_hmm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  return parse_finite_hmm(in);
}

}  // namespace lepf
