#pragma once

#include <stdexcept>
#include <string>

namespace derate {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (netlist, GML, CSV, workload). Carries a position
// when the format is line-oriented.
struct ParseError : Error {
  ParseError(std::string msg, int line = 0, int col = 0)
      : Error(line > 0 ? std::to_string(line) + ":" + std::to_string(col) +
                             ": " + msg
                       : msg),
        line(line),
        col(col) {}
  int line = 0;
  int col = 0;
};

// Structurally valid input that violates a well-formedness rule
// (multiply-driven net, unbound pin, duplicate GML id, ...).
struct ValidationError : Error {
  using Error::Error;
};

// Bad configuration or API misuse (k out of range, empty mask, ...).
struct ConfigError : Error {
  using Error::Error;
};

// A resource guard tripped (e.g. the exhaustive-injection limit).
struct GuardError : Error {
  using Error::Error;
};

// Filesystem trouble: missing artifact, unreadable or unwritable path.
struct IoError : Error {
  using Error::Error;
};

}  // namespace derate
