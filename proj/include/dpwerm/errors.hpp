// Copyright 2026 The dpwerm Authors
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

#ifndef DPWERM_ERRORS_HPP_
#define DPWERM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dpwerm {

// Error taxonomy mirrored by the CLI exit codes: config errors exit 2,
// data errors exit 3, convergence errors exit 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double grad_norm, int iterations)
      : std::runtime_error(what),
        grad_norm_(grad_norm),
        iterations_(iterations) {}

  double grad_norm() const { return grad_norm_; }
  int iterations() const { return iterations_; }

 private:
  double grad_norm_;
  int iterations_;
};

}  // namespace dpwerm

#endif  // DPWERM_ERRORS_HPP_
