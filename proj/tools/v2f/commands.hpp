// Copyright 2026 The v2f Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef V2F_TOOLS_COMMANDS_HPP_
#define V2F_TOOLS_COMMANDS_HPP_

namespace v2f::cli {

// Parses argv, runs one subcommand and returns the process exit code:
// 0 success, 2 usage/configuration, 3 data, 4 checkpoint mismatch.
int Main(int argc, char **argv);

}  // namespace v2f::cli

#endif  // V2F_TOOLS_COMMANDS_HPP_
