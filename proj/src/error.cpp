#include "cascadegp/error.hpp"

namespace cascadegp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kNonFinite: return "non-finite input";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kFactorization: return "factorization failure";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kMissingInput: return "missing input";
    case ErrorKind::kConfig: return "config error";
  }
  return "error";
}

}  // namespace cascadegp
