//Copyright (c) 2026, spinv authors
//
//Licensed under the Apache License, Version 2.0 (the "License");
//you may not use this file except in compliance with the License.
//You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//Unless required by applicable law or agreed to in writing, software
//distributed under the License is distributed on an "AS IS" BASIS,
//WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//See the License for the specific language governing permissions and
//limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad flags, bad config, parameter violations
inline constexpr int kExitNumeric = 2;   // solver failures, shape mismatches

/// Runs one command line (args excludes the program name). Outputs are
/// computed in memory and written only after the job succeeds.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 17 significant digits, '.' separator, "nan" / "inf" / "-inf".
std::string format_number(double x);

/// RFC 4180 quoting when the field holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// Parses RFC 4180 text into rows of fields; throws InputError on an
/// unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace spinv::cli
