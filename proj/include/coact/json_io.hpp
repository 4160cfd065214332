#pragma once

// JSON readers for the input files (response functions, graphs, scenarios)
// and writers for every result type. Field order in the output is fixed.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "coact/adag.hpp"
#include "coact/estimation.hpp"
#include "coact/mechanism.hpp"
#include "coact/simulator.hpp"

namespace coact::json_io {

using json = nlohmann::ordered_json;

/// Parse errors from nlohmann are rethrown as UsageError with the file name.
json read_file(const std::filesystem::path& path);

// ---- inputs ---------------------------------------------------------------

/// A domain is a list of numbers, a list of labels (values 0..k-1), or an
/// object {name, values, labels, ordered}.
mechanism::VariableDomain domain_from_json(const json& j, const std::string& default_name);
json to_json(const mechanism::VariableDomain& d);

/// {"domains": {"A": .., "B": .., "C": .., "U": ..}, "table": [0/1 ...]}.
/// C and U may be omitted. The table is row-major in (a, b, c, u).
mechanism::ResponseFunction response_from_json(const json& j);
json to_json(const mechanism::ResponseFunction& f);

/// {"variable": "A", "threshold": 2} or {"variable": "A", "members": [..]}.
mechanism::ValueSet value_set_from_json(const json& j);
json to_json(const mechanism::ValueSet& s);

/// {"nodes": ["A", {"id": "sigma_A", "kind": "regime", "governs": "A"}, ..],
///  "edges": [["A", "Y"], {"from": "sigma_A", "to": "A"}, ..]}
adag::Adag adag_from_json(const json& j);
json to_json(const adag::Adag& g);

/// `base` resolves a relative "response_file".
simulator::Scenario scenario_from_json(const json& j, const std::filesystem::path& base = {});
json to_json(const simulator::Scenario& s);

/// Optional "dichotomy": {"alpha": value set, "beta": value set}.
std::optional<simulator::Dichotomy> dichotomy_from_json(const json& scenario);

// ---- results --------------------------------------------------------------

json to_json(const mechanism::ResponseFunction& f, const mechanism::InterferenceWitness& w);
json to_json(const mechanism::ResponseFunction& f, const mechanism::CoactionVerdict& v);
json to_json(const mechanism::BooleanPattern& p);
json to_json(const mechanism::ResponseFunction& f, const mechanism::ProofWitness& w);

json to_json(const adag::ConditionVerdict& v);
json to_json(const adag::ConditionReport& r);
json to_json(const adag::SufficiencyResult& r);

json to_json(const estimation::AssumptionChecklist& list);
json to_json(const estimation::RiskTable& t);
json to_json(const estimation::TestResult& r);
json to_json(const estimation::ModelFit& f);

json to_json(const simulator::ExactRiskTable& t);
json to_json(const simulator::SoundnessReport& r);

}  // namespace coact::json_io
