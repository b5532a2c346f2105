#pragma once

#include <stdexcept>
#include <string>

namespace nljc {

// Probability weight would be lost beyond the Fock cutoff.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the region where a quantity can be evaluated reliably.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mandel Q of a state with vanishing mean occupation (0/0).
class UndefinedForVacuum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllConditionedDesign : public std::runtime_error {
 public:
  IllConditionedDesign(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

class StencilOutOfDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace nljc
