#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "coact/errors.hpp"
#include "coact/estimation.hpp"

namespace coact::estimation {

const char* to_string(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::holds: return "holds";
    case AssumptionStatus::asserted: return "asserted";
    case AssumptionStatus::failed: return "failed";
    case AssumptionStatus::unverified: return "unverified";
  }
  return "?";
}

AssumptionChecklist default_checklist() {
  return {
      {"core_condition_1", AssumptionStatus::unverified, "Y is a deterministic function of (A, B, C, U)"},
      {"core_condition_2", AssumptionStatus::unverified, "Y independent of regime given (A, B, C, U)"},
      {"core_condition_3", AssumptionStatus::unverified, "U independent of (A, B, regime) given C"},
      {"core_condition_4", AssumptionStatus::unverified, "A independent of B given (C, regime)"},
      {"monotonicity_A", AssumptionStatus::unverified, "effect of A on Y is monotonic"},
      {"monotonicity_B", AssumptionStatus::unverified, "effect of B on Y is monotonic"},
      {"alpha_insensitivity", AssumptionStatus::unverified, "A is alpha-insensitive"},
      {"beta_insensitivity", AssumptionStatus::unverified, "B is beta-insensitive"},
  };
}

void set_status(AssumptionChecklist& list, std::string_view name, AssumptionStatus s,
                std::string note) {
  for (auto& item : list)
    if (item.name == name) {
      item.status = s;
      if (!note.empty()) item.note = std::move(note);
      return;
    }
  throw UsageError("unknown assumption '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Stratum expressions

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

StratumFilter StratumFilter::parse(std::string_view expr) {
  StratumFilter f;
  f.text_ = trim(expr);
  if (f.text_.empty()) throw UsageError("empty stratum expression");

  std::string_view rest = f.text_;
  while (!rest.empty()) {
    auto amp = rest.find("&&");
    std::string part = trim(rest.substr(0, amp));
    rest = amp == std::string_view::npos ? std::string_view{} : rest.substr(amp + 2);
    if (part.empty()) throw UsageError("malformed stratum expression '" + f.text_ + "'");

    static constexpr std::pair<const char*, Op> kOps[] = {
        {"==", Op::eq}, {"!=", Op::ne}, {"<=", Op::le}, {">=", Op::ge},
        {"<", Op::lt},  {">", Op::gt},  {"=", Op::eq},
    };
    Clause c;
    bool matched = false;
    for (const auto& [tok, op] : kOps) {
      auto pos = part.find(tok);
      if (pos == std::string::npos) continue;
      c.column = trim(std::string_view(part).substr(0, pos));
      std::string rhs = trim(std::string_view(part).substr(pos + std::char_traits<char>::length(tok)));
      auto [ptr, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), c.value);
      if (c.column.empty() || rhs.empty() || ec != std::errc() || ptr != rhs.data() + rhs.size())
        throw UsageError("malformed stratum clause '" + part + "'");
      c.op = op;
      matched = true;
      break;
    }
    if (!matched) throw UsageError("stratum clause '" + part + "' has no comparison operator");
    f.clauses_.push_back(std::move(c));
  }
  return f;
}

bool StratumFilter::accepts(const Dataset& d, std::size_t row) const {
  for (const auto& c : clauses_) {
    const double v = d.values(c.column)[row];
    bool ok = false;
    switch (c.op) {
      case Op::eq: ok = v == c.value; break;
      case Op::ne: ok = v != c.value; break;
      case Op::lt: ok = v < c.value; break;
      case Op::le: ok = v <= c.value; break;
      case Op::gt: ok = v > c.value; break;
      case Op::ge: ok = v >= c.value; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::vector<std::string> StratumFilter::columns() const {
  std::vector<std::string> out;
  for (const auto& c : clauses_)
    if (std::find(out.begin(), out.end(), c.column) == out.end()) out.push_back(c.column);
  return out;
}

// ---------------------------------------------------------------------------
// dichotomize

namespace {

std::vector<double> recoded(const std::vector<double>& values,
                            const std::optional<std::map<double, double>>& map,
                            const std::string& var) {
  if (!map) return values;
  std::set<double> present(values.begin(), values.end());
  std::set<double> images;
  for (double v : present) {
    auto it = map->find(v);
    if (it == map->end()) {
      std::ostringstream os;
      os << "recoding of '" << var << "' does not cover level " << v;
      throw UsageError(os.str());
    }
    if (!images.insert(it->second).second)
      throw UsageError("recoding of '" + var + "' is not a bijection on the observed levels");
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(map->at(v));
  return out;
}

Column indicator(const char* name, const std::vector<double>& values, const ValueSet& set,
                 const std::string& var) {
  Column c{name, ColumnType::binary, {}};
  std::size_t ones = 0;
  for (double v : values) {
    const bool in = set.contains(v);
    ones += in;
    c.values.push_back(in ? 1.0 : 0.0);
  }
  if (ones == 0)
    throw DegenerateError("block " + set.describe() + " on '" + var + "' is empty after filtering");
  if (ones == values.size())
    throw DegenerateError("complement of block " + set.describe() + " on '" + var +
                          "' is empty after filtering");
  return c;
}

}  // namespace

Dichotomized dichotomize(const Dataset& data, const DichotomizationSpec& spec) {
  if (spec.a_var == spec.b_var) throw UsageError("A and B must be different columns");
  std::vector<std::string> needed{spec.a_var, spec.b_var, data.outcome()};
  if (spec.stratum)
    for (const auto& c : spec.stratum->columns()) needed.push_back(c);
  for (const auto& k : spec.keep) needed.push_back(k);
  for (const auto& n : needed)
    if (!data.has(n)) throw UsageError("no column named '" + n + "'");
  for (const auto* n : {kAlphaColumn, kBetaColumn})
    if (data.has(n)) throw UsageError(std::string("input already has a column named '") + n + "'");

  Dichotomized out;
  out.input_rows = data.rows();
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const bool complete = std::none_of(needed.begin(), needed.end(), [&](const std::string& n) {
      return std::isnan(data.values(n)[r]);
    });
    if (!complete) {
      ++out.dropped_missing;
      continue;
    }
    if (spec.stratum && !spec.stratum->accepts(data, r)) {
      ++out.dropped_stratum;
      continue;
    }
    keep.push_back(r);
  }

  out.data = data.select_rows(keep);
  const auto a = recoded(out.data.values(spec.a_var), spec.recode_a, spec.a_var);
  const auto b = recoded(out.data.values(spec.b_var), spec.recode_b, spec.b_var);
  out.data.add_column(indicator(kAlphaColumn, a, spec.alpha, spec.a_var));
  out.data.add_column(indicator(kBetaColumn, b, spec.beta, spec.b_var));

  std::ostringstream os;
  os << "alpha: " << spec.a_var << (spec.recode_a ? "*" : "") << " in " << spec.alpha.describe()
     << "; beta: " << spec.b_var << (spec.recode_b ? "*" : "") << " in " << spec.beta.describe();
  if (spec.stratum) os << "; stratum: " << spec.stratum->text();
  out.description = os.str();
  return out;
}

double median_threshold(const Dataset& data, const std::string& column) {
  std::vector<double> v;
  for (double x : data.values(column))
    if (!std::isnan(x)) v.push_back(x);
  if (v.empty()) throw DegenerateError("column '" + column + "' has no observed values");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace coact::estimation
