#pragma once

#include <stdexcept>
#include <string>

namespace nefqvf {

// Argument outside a family's mean/natural domain, or otherwise invalid input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An enumeration or table would exceed its documented size cap.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Float-mode computation lost too much accuracy to be trusted.
class NumericInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Orthogonal polynomial degree with a_k(v2) = 0 (binomial degrees above m).
class DegenerateDegree : public DomainError {
 public:
  using DomainError::DomainError;
};

// Malformed configuration or model file. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nefqvf
