#include <cmath>
#include <limits>
#include <sstream>

#include "coact/errors.hpp"
#include "coact/estimation.hpp"

namespace coact::estimation {

const RiskCell& RiskTable::cell(int i, int j) const {
  if (i < 0 || i > 1 || j < 0 || j > 1) throw UsageError("risk cell index out of range");
  const auto& c = cells[i][j];
  if (!c)
    throw UsageError("risk cell R" + std::to_string(i) + std::to_string(j) + " is not available");
  return *c;
}

RiskTable estimate_risk_table(const Dataset& d, std::string stratum) {
  for (const auto* n : {kAlphaColumn, kBetaColumn})
    if (!d.has(n)) throw UsageError(std::string("data has no '") + n + "' column; dichotomize first");
  const auto& a = d.values(kAlphaColumn);
  const auto& b = d.values(kBetaColumn);
  const auto& y = d.values(d.outcome());

  std::size_t count[2][2] = {};
  std::size_t events[2][2] = {};
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (std::isnan(a[r]) || std::isnan(b[r]) || std::isnan(y[r])) continue;
    const int i = a[r] != 0.0, j = b[r] != 0.0;
    ++count[i][j];
    events[i][j] += y[r] != 0.0;
  }

  RiskTable t;
  t.stratum = std::move(stratum);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto n = count[i][j];
      if (n == 0) {
        std::ostringstream os;
        os << "cell R" << i << j << " (alpha_ind=" << i << ", beta_ind=" << j << ")";
        if (!t.stratum.empty()) os << " in stratum " << t.stratum;
        os << " has no observations";
        throw EstimationError(os.str());
      }
      RiskCell c;
      c.count = n;
      c.estimate = static_cast<double>(events[i][j]) / static_cast<double>(n);
      c.se = std::sqrt(c.estimate * (1.0 - c.estimate) / static_cast<double>(n));
      c.low_count = n < kLowCount;
      t.cells[i][j] = c;
    }
  return t;
}

double upper_tail(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

void fill_normal_test(TestResult& r) {
  if (r.se > 0) {
    r.z = r.statistic / r.se;
    r.p_value = upper_tail(r.z);
  } else if (r.statistic > 0) {
    r.z = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else if (r.statistic < 0) {
    r.z = -std::numeric_limits<double>::infinity();
    r.p_value = 1.0;
  } else {
    r.z = 0.0;
    r.p_value = 0.5;
  }
}

TestResult excess_risk_test(const RiskTable& table) {
  const auto& r11 = table.cell(1, 1);
  const auto& r10 = table.cell(1, 0);
  const auto& r01 = table.cell(0, 1);

  TestResult r;
  r.method = "nonparametric";
  r.cells = {r11.estimate, r10.estimate, r01.estimate};
  r.statistic = r11.estimate - r10.estimate - r01.estimate;
  r.se = std::sqrt(r11.se * r11.se + r10.se * r10.se + r01.se * r01.se);
  fill_normal_test(r);
  for (const auto* c : {&r11, &r10, &r01})
    if (c->low_count) {
      r.notes.push_back("low cell count (< " + std::to_string(kLowCount) +
                        "); binomial SE is unreliable");
      break;
    }
  return r;
}

}  // namespace coact::estimation
