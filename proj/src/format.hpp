#pragma once

#include <cstdio>
#include <string>

namespace tracesum
{

// Scientific notation, 17 significant digits, '.' decimal separator.
inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

}  // namespace tracesum
