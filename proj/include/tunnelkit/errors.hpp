#pragma once

#include <stdexcept>
#include <string>

namespace tk {

enum class ErrorKind { Config, Assumption, Solver, Domain, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Assumption: return "assumption";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

// CLI exit status for an error category.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Assumption: return 3;
    case ErrorKind::Solver:
    case ErrorKind::Domain: return 4;
    case ErrorKind::Internal: return 1;
  }
  return 1;
}

}  // namespace tk
