// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace geomdn {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDomain = 2,
  kContract = 3,
  kIo = 4,
  kFormat = 5,
  kTraining = 6,
  kInit = 7,
  kPipeline = 8,
};

/// Base class for every error thrown by the library. The C API maps the code
/// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define GEOMDN_DEFINE_ERROR(Name, Code)                          \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(Code, what) {} \
  };

GEOMDN_DEFINE_ERROR(InvalidArgument, ErrorCode::kInvalidArgument)
// Parameter outside the mathematical domain (sigma <= 0, |rho| >= 1, ...).
GEOMDN_DEFINE_ERROR(DomainError, ErrorCode::kDomain)
// Caller broke a shape or sequencing contract.
GEOMDN_DEFINE_ERROR(ContractError, ErrorCode::kContract)
GEOMDN_DEFINE_ERROR(IoError, ErrorCode::kIo)
GEOMDN_DEFINE_ERROR(FormatError, ErrorCode::kFormat)
GEOMDN_DEFINE_ERROR(TrainingError, ErrorCode::kTraining)
GEOMDN_DEFINE_ERROR(InitError, ErrorCode::kInit)
GEOMDN_DEFINE_ERROR(PipelineError, ErrorCode::kPipeline)

#undef GEOMDN_DEFINE_ERROR

}  // namespace geomdn
