#pragma once

#include <string>
#include <vector>

#include "drt/mpqp.hpp"
#include "drt/network.hpp"
#include "drt/sced.hpp"
#include "drt/targeting.hpp"

namespace drt {

// All emitters produce key-sorted JSON with round-trip double formatting, so
// two runs with the same inputs yield byte-identical files.

std::string case_to_json(const NetworkCase& net);

// FNV-1a over the canonical case serialization; links artifacts to the case
// they were computed from.
std::string case_hash(const NetworkCase& net);

std::string dispatch_to_json(const NetworkCase& net,
                             const Eigen::VectorXd& load,
                             const DispatchResult& dr);

std::string policy_to_json(const NetworkCase& net, const Policy& policy);

struct LoadedPolicy {
  NetworkCase net;
  Policy policy;
  std::string hash;
};
LoadedPolicy policy_from_json_text(const std::string& text);
LoadedPolicy policy_from_file(const std::string& path);

std::string plan_to_json(const NetworkCase& net, const TargetingSpec& spec,
                         const std::string& mode, const TargetingPlan& plan);

std::string scenarios_to_json(const NetworkCase& net,
                              const std::vector<Eigen::VectorXd>& scenarios,
                              double sigma, std::uint64_t seed);
std::vector<Eigen::VectorXd> scenarios_from_file(const std::string& path,
                                                 const NetworkCase& net);

// Full nodal load from {"load": [{"node": id, "mw": value}, ...]}; nodes not
// listed keep the case base load.
Eigen::VectorXd load_vector_from_file(const std::string& path,
                                      const NetworkCase& net);

// Per-node positive values from {"values": [{"node": id, "value": v}, ...]},
// on top of a constant fill.
Eigen::VectorXd node_values_from_file(const std::string& path,
                                      const NetworkCase& net, double fill);

// Write via a temp file + rename so readers never observe a torn file.
void write_atomic(const std::string& path, const std::string& text);

}  // namespace drt
