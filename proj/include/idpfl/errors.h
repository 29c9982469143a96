// Copyright 2026 The IDP-FL Authors
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

#ifndef IDPFL_ERRORS_H_
#define IDPFL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace idpfl {

// Invalid argument to a numerical routine (bad q, sigma, order, shape...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No noise multiplier / sampling plan can satisfy the requested budget.
class InfeasibleBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration failed validation. `key()` names the offending
// field using a dotted path, e.g. "privacy.distributions[1].fractions".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace idpfl

#endif  // IDPFL_ERRORS_H_
