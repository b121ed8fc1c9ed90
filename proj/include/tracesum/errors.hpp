#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracesum
{

enum class ErrorCode
{
  NonPositiveMetric,
  DuplicateIndex,
  DimensionMismatch,
  InsufficientPoints,
  InvalidSpec,
  OutOfDomain,
  SpectrumHit,
  BasePointInSpectrum,
  UnsupportedKernel,
  UnsupportedBlock,
  SearchFailure,
  DegenerateNull,
  SecularSingular,
  ModelMismatch,
  GridTooCoarse,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

// Library-wide exception; the code is stable and surfaced by the CLI.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace tracesum
