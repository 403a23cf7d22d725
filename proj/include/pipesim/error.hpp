/**
 * Copyright 2026 The pipesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PIPESIM_ERROR_HPP_
#define PIPESIM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pipesim {

// Shape or index disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment configuration. `path` names the offending field
// (e.g. "optimizer.beta1") when one is known.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string &msg, std::string path = {})
      : std::invalid_argument(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

// A NaN/Inf appeared where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pipesim

#endif  // PIPESIM_ERROR_HPP_
