#pragma once

#include <stdexcept>

namespace codp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An element was used with a poset it does not belong to.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two operands live over different posets (or units) where equality is required.
class PosetMismatchError : public Error {
 public:
  using Error::Error;
};

/// The operation has no procedure for the given poset.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class InfinitePosetError : public UnsupportedError {
 public:
  using UnsupportedError::UnsupportedError;
};

}  // namespace codp
