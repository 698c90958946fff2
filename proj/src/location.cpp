#include "meltlite/location.hpp"

#include <sstream>

namespace meltlite {

const std::string &Location::file_name() const {
  static const std::string unknown = "<unknown>";
  return file ? *file : unknown;
}

std::string Location::str() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream &operator<<(std::ostream &os, const Location &loc) {
  return os << loc.file_name() << ':' << loc.line << ':' << loc.column;
}

const char *phase_name(Phase p) {
  switch (p) {
  case Phase::read: return "read";
  case Phase::expand: return "expansion";
  case Phase::normalize: return "normalization";
  case Phase::match: return "match";
  case Phase::emit: return "emission";
  case Phase::driver: return "driver";
  }
  return "?";
}

CompileError::CompileError(Phase phase, Location where, const std::string &message)
    : std::runtime_error(where.str() + ": " + message), phase_(phase), where_(std::move(where)),
      message_(message) {}

std::string CompileError::diagnostic() const {
  return where_.str() + ": " + phase_name(phase_) + " error: " + message_;
}

} // namespace meltlite
