// Copyright 2026 The SLF Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace slf {

// Every failure raised by the library carries a short machine-readable code
// (snake_case, shared with ValidationIssue codes where the two overlap) in
// addition to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

  // Failures caused by the environment (missing files, unreadable
  // directories) rather than by the content of the data.
  bool is_environmental() const noexcept {
    return code_ == "io_error" || code_ == "not_slf_dataset";
  }

 private:
  std::string code_;
};

}  // namespace slf
