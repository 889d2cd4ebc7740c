/*
 * Copyright 2026 The bbfi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Minimal external predictor for tests. Speaks the JSON line protocol and
// misbehaves on request, selected by argv[1]:
//   first        y = first cell (string cells count as their length)
//   wrong-id     answers with id - 1
//   non-numeric  answers with a string prediction
//   short        answers with one prediction too few
//   garbage      answers with a line that is not JSON
//   exit         writes to stderr and exits before answering

#include <iostream>
#include <string>

#include "json.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "first";
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto request = nlohmann::json::parse(line);
    const auto id = request.at("id").get<long long>();
    if (mode == "exit") {
      std::cerr << "model crashed on request " << id << "\n";
      return 3;
    }
    if (mode == "garbage") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    nlohmann::json y = nlohmann::json::array();
    for (const auto& row : request.at("x")) {
      const auto& cell = row.at(0);
      y.push_back(cell.is_string() ? static_cast<double>(cell.get<std::string>().size())
                                   : cell.get<double>());
    }
    if (mode == "non-numeric") y[0] = "oops";
    if (mode == "short") y.erase(y.size() - 1);
    const long long reply_id = mode == "wrong-id" ? id - 1 : id;
    std::cout << nlohmann::json{{"id", reply_id}, {"y", y}}.dump() << std::endl;
  }
  return 0;
}
