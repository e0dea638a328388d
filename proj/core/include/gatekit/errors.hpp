/*
 * Copyright 2026 The gatekit Authors
 *
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
#ifndef GATEKIT_ERRORS_HPP_
#define GATEKIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gatekit {

// Broad failure classes used by the CLI to pick exit codes:
// data errors map to exit 1, usage errors to 2, numeric failures to 3.
enum class ErrorClass { data, usage, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& kind, const std::string& msg)
      : std::runtime_error(msg), cls_(cls), kind_(kind) {}
  ErrorClass error_class() const { return cls_; }
  const std::string& kind() const { return kind_; }

 private:
  ErrorClass cls_;
  std::string kind_;
};

#define GATEKIT_DEFINE_ERROR(NAME, CLASS)                      \
  class NAME : public Error {                                  \
   public:                                                     \
    explicit NAME(const std::string& msg)                      \
        : Error(ErrorClass::CLASS, #NAME, msg) {}              \
  }

GATEKIT_DEFINE_ERROR(SchemaError, data);
GATEKIT_DEFINE_ERROR(TreatmentError, data);
GATEKIT_DEFINE_ERROR(DataError, data);
GATEKIT_DEFINE_ERROR(EmptyArmError, data);
GATEKIT_DEFINE_ERROR(UsageError, usage);
GATEKIT_DEFINE_ERROR(DimensionError, numeric);
GATEKIT_DEFINE_ERROR(InsufficientMatchesError, numeric);
GATEKIT_DEFINE_ERROR(EmptyCellError, numeric);
GATEKIT_DEFINE_ERROR(BandwidthError, numeric);
GATEKIT_DEFINE_ERROR(RankError, numeric);
GATEKIT_DEFINE_ERROR(FoldError, numeric);
GATEKIT_DEFINE_ERROR(SubsampleError, numeric);

#undef GATEKIT_DEFINE_ERROR

}  // namespace gatekit

#endif  // GATEKIT_ERRORS_HPP_
