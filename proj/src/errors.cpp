#include "tracesum/errors.hpp"

namespace tracesum
{

std::string_view to_string(ErrorCode code)
{
  switch (code)
  {
    case ErrorCode::NonPositiveMetric:
      return "NonPositiveMetric";
    case ErrorCode::DuplicateIndex:
      return "DuplicateIndex";
    case ErrorCode::DimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::InsufficientPoints:
      return "InsufficientPoints";
    case ErrorCode::InvalidSpec:
      return "InvalidSpec";
    case ErrorCode::OutOfDomain:
      return "OutOfDomain";
    case ErrorCode::SpectrumHit:
      return "SpectrumHit";
    case ErrorCode::BasePointInSpectrum:
      return "BasePointInSpectrum";
    case ErrorCode::UnsupportedKernel:
      return "UnsupportedKernel";
    case ErrorCode::UnsupportedBlock:
      return "UnsupportedBlock";
    case ErrorCode::SearchFailure:
      return "SearchFailure";
    case ErrorCode::DegenerateNull:
      return "DegenerateNull";
    case ErrorCode::SecularSingular:
      return "SecularSingular";
    case ErrorCode::ModelMismatch:
      return "ModelMismatch";
    case ErrorCode::GridTooCoarse:
      return "GridTooCoarse";
    case ErrorCode::ParseError:
      return "ParseError";
    case ErrorCode::ValidationError:
      return "ValidationError";
  }
  return "Unknown";
}

}  // namespace tracesum
