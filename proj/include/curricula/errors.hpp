#pragma once

#include <stdexcept>
#include <string>

namespace curricula {

// Error categories; values double as C-API status codes and feed CLI exit codes.
enum class ErrorCode {
  None = 0,
  Parse = 1,
  Validation = 2,
  Config = 3,
  Dimension = 4,
  Feature = 5,
  NonFinite = 6,
  Format = 7,
  Integrity = 8,
  Label = 9,
  Spec = 10,
  Trainer = 11,
  Io = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define CURRICULA_DEFINE_ERROR(NAME, CODE)                 \
  class NAME : public Error {                              \
   public:                                                 \
    explicit NAME(const std::string& message)              \
        : Error(ErrorCode::CODE, message) {}               \
  }

CURRICULA_DEFINE_ERROR(ParseError, Parse);
CURRICULA_DEFINE_ERROR(ValidationError, Validation);
CURRICULA_DEFINE_ERROR(ConfigError, Config);
CURRICULA_DEFINE_ERROR(DimensionError, Dimension);
CURRICULA_DEFINE_ERROR(FeatureError, Feature);
CURRICULA_DEFINE_ERROR(NonFiniteError, NonFinite);
CURRICULA_DEFINE_ERROR(FormatError, Format);
CURRICULA_DEFINE_ERROR(IntegrityError, Integrity);
CURRICULA_DEFINE_ERROR(LabelError, Label);
CURRICULA_DEFINE_ERROR(SpecError, Spec);
CURRICULA_DEFINE_ERROR(TrainerError, Trainer);
CURRICULA_DEFINE_ERROR(IoError, Io);

#undef CURRICULA_DEFINE_ERROR

}  // namespace curricula
