// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace n2s {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Tensor or matrix dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (overflow, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied value outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace n2s
