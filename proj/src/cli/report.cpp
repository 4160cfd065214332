#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "coact/cli.hpp"
#include "coact/errors.hpp"
#include "coact/json_io.hpp"

namespace coact::cli {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string inputs_digest(const std::string& command, const json& parameters,
                          const std::vector<std::string>& files) {
  std::string bytes = command;
  bytes += '\0';
  bytes += parameters.dump();
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + f + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    bytes += '\0';
    bytes += buf.str();
  }
  return fnv1a_hex(bytes);
}

json Report::to_json() const {
  json warn_list = json::array();
  for (const auto& w : warnings) warn_list.push_back({{"code", w.code}, {"message", w.message}});
  json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["inputs_digest"] = inputs_digest;
  j["result"] = result;
  j["assumptions"] = json_io::to_json(assumptions);
  j["warnings"] = std::move(warn_list);
  return j;
}

void print_assumptions(std::ostream& out, const estimation::AssumptionChecklist& list) {
  out << "\nAssumptions:\n";
  if (list.empty()) {
    out << "  (none)\n";
    return;
  }
  std::size_t width = 0;
  for (const auto& a : list) width = std::max(width, a.name.size());
  for (const auto& a : list) {
    out << "  " << std::left << std::setw(static_cast<int>(width)) << a.name << "  "
        << std::setw(10) << estimation::to_string(a.status) << "  " << a.note << '\n';
  }
  out << std::right;
}

void print_warnings(std::ostream& out, const std::vector<Warning>& warnings) {
  if (warnings.empty()) return;
  out << "\nWarnings:\n";
  for (const auto& w : warnings) out << "  " << w.code << "  " << w.message << '\n';
}

}  // namespace coact::cli
