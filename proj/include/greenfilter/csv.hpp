/*
 * Copyright 2026 The greenfilter Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace greenfilter::csv {

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

void write_row(std::ostream& os, const std::vector<std::string>& cells);
void write_row(std::ostream& os, const std::vector<double>& cells);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric table with one header line. Throws ParseError.
Table read_table(std::istream& is);

}  // namespace greenfilter::csv
