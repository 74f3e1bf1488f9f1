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


// Randomized scenes shared by the unit and acceptance tests.

#ifndef SPLATPHYS_TESTS_RANDOM_SCENE_HPP_
#define SPLATPHYS_TESTS_RANDOM_SCENE_HPP_

#include "splatphys/selftest.hpp"

namespace splatphys::testing {

using splatphys::front_camera;
using splatphys::random_scene;

}  // namespace splatphys::testing

#endif  // SPLATPHYS_TESTS_RANDOM_SCENE_HPP_
