// Copyright 2026 The dpopf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// The three distributed variants: plain consensus ADMM, ADMM with one static
// noise draw per zone, and ADMM with noise recalibrated every iteration.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpopf/admm.hpp"
#include "dpopf/privacy.hpp"

namespace dpopf {

enum class Algorithm { Admm, SpAdmm, DpAdmm };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Admm:
      return "admm";
    case Algorithm::SpAdmm:
      return "sp-admm";
    case Algorithm::DpAdmm:
      return "dp-admm";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "admm") return Algorithm::Admm;
  if (s == "sp-admm") return Algorithm::SpAdmm;
  if (s == "dp-admm") return Algorithm::DpAdmm;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

// Static-plan bounds: the system-wide largest load under GlobalBound,
// otherwise the per-zone maximum local sensitivity of a dynamic run with the
// same settings.
inline std::vector<double> static_bounds(const NetworkCase& c, const ZonePartition& part,
                                         const AdmmConfig& cfg, const PrivacyParams& params) {
  if (params.mode == SensitivityMode::GlobalBound) {
    return global_bounds(c, build_zone_views(c, part));
  }
  AdmmConfig pilot = cfg;
  pilot.record_history = false;
  return max_local_sensitivity(run_admm(c, part, pilot, make_dynamic_plan(params, cfg.qp)));
}

inline AdmmResult run_algorithm(const NetworkCase& c, const ZonePartition& part,
                                Algorithm algo, const AdmmConfig& cfg,
                                const PrivacyParams& params) {
  switch (algo) {
    case Algorithm::Admm:
      return run_admm(c, part, cfg);
    case Algorithm::SpAdmm: {
      params.validate();
      const std::vector<double> bounds = static_bounds(c, part, cfg, params);
      return run_admm(c, part, cfg,
                      make_static_plan(build_zone_views(c, part), bounds, params));
    }
    case Algorithm::DpAdmm:
      return run_admm(c, part, cfg, make_dynamic_plan(params, cfg.qp));
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace dpopf
