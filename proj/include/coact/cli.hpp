#pragma once

// The `coact` command line: mech classify, adag check, test, simulate and
// soundness. Reports go to stdout as text or (with --json) as JSON.
//
// Exit codes: 0 success (a negative verdict is still a success), 1 analysis
// error, 2 usage error.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coact/estimation.hpp"

namespace coact::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysis = 1;
inline constexpr int kExitUsage = 2;

/// Stable warning codes. Codes are never reused for a different meaning.
namespace warn {
inline constexpr const char* low_count = "W001";
inline constexpr const char* rows_dropped = "W002";
inline constexpr const char* boundary_fit = "W003";
inline constexpr const char* unverified_assumptions = "W004";
inline constexpr const char* rare_disease = "W005";
inline constexpr const char* internal_error = "W006";
inline constexpr const char* trials_skipped = "W007";
inline constexpr const char* bootstrap_failures = "W008";
inline constexpr const char* functionality_unasserted = "W009";
inline constexpr const char* no_claim = "W010";
inline constexpr const char* not_monotone = "W011";
inline constexpr const char* expected_information = "W012";
inline constexpr const char* counterexamples = "W013";
inline constexpr const char* not_insensitive = "W014";
}  // namespace warn

struct Warning {
  std::string code;
  std::string message;
};

struct Report {
  std::string command;
  json parameters = json::object();
  std::string inputs_digest;
  json result = json::object();
  estimation::AssumptionChecklist assumptions;
  std::vector<Warning> warnings;

  void warn(const char* code, std::string message) { warnings.push_back({code, std::move(message)}); }
  json to_json() const;
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Digest of the command, its canonical parameters and the bytes of every
/// input file, in order.
std::string inputs_digest(const std::string& command, const json& parameters,
                          const std::vector<std::string>& files);

/// Assumption table and warning list as printed at the end of text reports.
void print_assumptions(std::ostream& out, const estimation::AssumptionChecklist& list);
void print_warnings(std::ostream& out, const std::vector<Warning>& warnings);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coact::cli
