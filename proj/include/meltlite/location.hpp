#pragma once

#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

namespace meltlite {

struct Location {
  std::shared_ptr<const std::string> file;
  int line = 1;
  int column = 0;

  const std::string &file_name() const;
  std::string str() const;
};

std::ostream &operator<<(std::ostream &os, const Location &loc);

/// Which pass raised a diagnostic.
enum class Phase { read, expand, normalize, match, emit, driver };

const char *phase_name(Phase p);

/// A positioned translation error. Every pass throws this; the driver turns
/// it into a `file:line:col: error: ...` diagnostic.
class CompileError : public std::runtime_error {
public:
  CompileError(Phase phase, Location where, const std::string &message);

  Phase phase() const { return phase_; }
  const Location &where() const { return where_; }
  const std::string &message() const { return message_; }

  /// `file:line:col: <phase> error: message`
  std::string diagnostic() const;

private:
  Phase phase_;
  Location where_;
  std::string message_;
};

} // namespace meltlite
