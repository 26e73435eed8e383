#pragma once

#include <stdexcept>
#include <string>

namespace fcomp {

/// Thrown when an operation is asked to work with a scoring rule outside its
/// supported class (unbounded, wrong outcome domain, or out of [0,1] where
/// the mechanism requires it).
class UnsupportedRuleError : public std::runtime_error {
  public:
    explicit UnsupportedRuleError(const std::string& what) : std::runtime_error(what) {}
};

/// File or string parsing failure. `line` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

/// Thrown when a best-response grid would exceed the configured evaluation
/// budget.
class GridTooLargeError : public std::runtime_error {
  public:
    explicit GridTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fcomp
