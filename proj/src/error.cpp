#include "phonoprobe/error.hpp"

namespace phonoprobe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::classification: return "classification error";
    case ErrorKind::ambiguity: return "ambiguity error";
    case ErrorKind::format: return "format error";
    case ErrorKind::corruption: return "corruption error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::data: return "data error";
    case ErrorKind::insufficient: return "insufficient data";
    case ErrorKind::metric: return "undefined metric";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

void rethrow_with_context(const Error& e, std::string_view context) {
  throw Error(e.kind(), std::string(context) + ": " + e.what());
}

} // namespace phonoprobe
