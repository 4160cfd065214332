#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "coact/errors.hpp"
#include "coact/estimation.hpp"
#include "coact/rng.hpp"

namespace coact::estimation {

Estimator nonparametric_estimator() {
  return [](const Dataset& d) { return excess_risk_test(estimate_risk_table(d)).statistic; };
}

Estimator linear_risk_estimator(Formula f, CellCoding coding, double t) {
  return [f = std::move(f), coding = std::move(coding), t](const Dataset& d) {
    return model_excess_risk(fit_linear_risk(d, f), coding, t).statistic;
  };
}

Estimator linear_odds_estimator(Formula f) {
  return [f = std::move(f)](const Dataset& d) {
    return rare_disease_excess(fit_linear_odds(d, f)).statistic;
  };
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapResult bootstrap(const Dataset& data, const Estimator& estimator,
                          const BootstrapOptions& opt) {
  if (opt.resamples < 100) throw UsageError("the bootstrap needs at least 100 resamples");
  if (!(opt.level > 0 && opt.level < 1)) throw UsageError("interval level must lie in (0, 1)");
  if (data.rows() == 0) throw UsageError("cannot bootstrap an empty dataset");

  BootstrapResult out;
  out.estimate = estimator(data);

  const auto n = data.rows();
  const auto total = static_cast<std::size_t>(opt.resamples);
  std::vector<double> values(total, std::numeric_limits<double>::quiet_NaN());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto work = [&] {
    std::vector<std::size_t> rows(n);
    for (std::size_t b; (b = next.fetch_add(1)) < total;) {
      rng::Stream stream(opt.seed, "bootstrap", b);
      for (auto& r : rows) r = stream.below(n);
      try {
        values[b] = estimator(data.select_rows(rows));
      } catch (const AnalysisError&) {
        // counted as a failed resample
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(total);
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, opt.resamples));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  for (double v : values) {
    if (std::isnan(v))
      ++out.failures;
    else
      out.draws.push_back(v);
  }
  if (out.failures * 10 > opt.resamples) {
    std::ostringstream os;
    os << "estimator failed on " << out.failures << " of " << opt.resamples << " resamples";
    throw BootstrapError(os.str());
  }

  const double m = static_cast<double>(out.draws.size());
  double mean = 0;
  for (double v : out.draws) mean += v;
  mean /= m;
  double ss = 0;
  std::size_t nonpositive = 0;
  for (double v : out.draws) {
    ss += (v - mean) * (v - mean);
    nonpositive += v <= 0;
  }
  out.se = out.draws.size() > 1 ? std::sqrt(ss / (m - 1)) : 0.0;
  out.p_value = static_cast<double>(nonpositive) / m;

  std::vector<double> sorted = out.draws;
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1 - opt.level) / 2;
  out.lower = quantile(sorted, tail);
  out.upper = quantile(sorted, 1 - tail);
  return out;
}

TestResult bootstrap_test(const Dataset& data, const Estimator& estimator,
                          const BootstrapOptions& opt) {
  return bootstrap_test(bootstrap(data, estimator, opt), opt);
}

TestResult bootstrap_test(const BootstrapResult& b, const BootstrapOptions& opt) {
  TestResult r;
  r.method = "bootstrap";
  r.statistic = b.estimate;
  r.se = b.se;
  r.z = b.se > 0 ? b.estimate / b.se : 0.0;
  r.p_value = b.p_value;
  r.interval = std::pair{b.lower, b.upper};
  r.interval_level = opt.level;
  std::ostringstream os;
  os << opt.resamples << " row resamples, seed " << opt.seed << ", percentile interval";
  if (b.failures) os << ", " << b.failures << " failed resamples dropped";
  r.notes.push_back(os.str());
  return r;
}

}  // namespace coact::estimation
