// Copyright 2026 The splatphys Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Built-in property checks. Each check is deterministic: it seeds its own
// generators and reports a measured value with no timing information, so
// two runs print identical text.

#ifndef SPLATPHYS_SELFTEST_HPP_
#define SPLATPHYS_SELFTEST_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "splatphys/gaussian_scene.hpp"

namespace splatphys {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst observed error for the property
  double tolerance = 0.0;
  std::string detail;      // extra context on failure
};

// "PASS name measured=... tolerance=..." with fixed formatting.
std::string format_result(const PropertyResult& r);

// Tape gradients of every differentiable primitive versus central
// differences; `trials` random inputs per op.
PropertyResult check_primitive_gradients(int trials = 100);
// Tiled renderer versus the brute-force reference on `scenes` random scenes
// of up to 64 particles at 64 x 64.
PropertyResult check_render_equivalence(int scenes = 20);
PropertyResult check_render_gradients(int scenes = 20);
// |div v| by central differences at `samples` random (field, p, t).
PropertyResult check_divergence_free(int samples = 1000);
PropertyResult check_mass_conservation(int substeps = 2000);
PropertyResult check_momentum_conservation(int substeps = 2000);
// Free fall versus p0 + v0 t + g t^2 / 2 at t = 0.3 s.
PropertyResult check_ballistic();
// d(mean height)/d(v0y) through a 50-substep gravity rollout.
PropertyResult check_launch_gradient();
// d(loss)/dE on a compressed block versus finite differences.
PropertyResult check_modulus_gradient();
PropertyResult check_metric_properties();
PropertyResult check_protocol();

struct NamedCheck {
  std::string name;
  std::function<PropertyResult()> run;
};
std::vector<NamedCheck> selftest_checks();

// Runs every check, writing one formatted line per result to `out`.
// Returns true when all pass.
bool run_selftest(const std::function<void(const std::string&)>& out);

// Random scene in [-0.5, 0.5]^3 and a camera three units down -z looking
// at the origin; shared by the checks and benchmarks.
Scene random_scene(std::uint64_t seed, int count, int sh_degree = 0);
Camera front_camera(int width, int height);

}  // namespace splatphys

#endif  // SPLATPHYS_SELFTEST_HPP_
