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

// The splatphys command line, callable in-process for tests.

#ifndef SPLATPHYS_TOOLS_CLI_HPP_
#define SPLATPHYS_TOOLS_CLI_HPP_

#include <ostream>

namespace splatphys::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed property or runtime error
inline constexpr int kExitUsage = 2;    // bad flags, values or input files

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace splatphys::cli

#endif  // SPLATPHYS_TOOLS_CLI_HPP_
