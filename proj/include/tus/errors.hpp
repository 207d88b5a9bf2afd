#pragma once

#include <stdexcept>
#include <string>

namespace tus {

// Malformed input file; message carries the row number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int row = -1)
      : std::runtime_error(row >= 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class StructuralError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class SizeGuardError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solution passed the row check but not the oracle, or the reverse.
class InvariantError : public std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace tus
