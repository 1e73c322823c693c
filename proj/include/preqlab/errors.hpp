// Copyright 2026 The Preqlab Authors
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

#ifndef PREQLAB_ERRORS_HPP_
#define PREQLAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace preqlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PREQLAB_DEFINE_ERROR(Name)       \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

PREQLAB_DEFINE_ERROR(InvalidArgument);
PREQLAB_DEFINE_ERROR(ZeroMassHistory);
PREQLAB_DEFINE_ERROR(ZeroMassOutcome);
PREQLAB_DEFINE_ERROR(EmptyRealization);
PREQLAB_DEFINE_ERROR(InconsistentTrace);
PREQLAB_DEFINE_ERROR(InfeasibleMoments);
PREQLAB_DEFINE_ERROR(InvalidParams);
PREQLAB_DEFINE_ERROR(HorizonTooLarge);
PREQLAB_DEFINE_ERROR(PreconditionFailed);
PREQLAB_DEFINE_ERROR(IoError);

#undef PREQLAB_DEFINE_ERROR

// Configuration error carrying the dotted path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace preqlab

#endif  // PREQLAB_ERRORS_HPP_
