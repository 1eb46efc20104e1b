// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace radbev {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or channel mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inconsistent run configuration (bin counts, missing poses, bad JSON).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A request would exceed a configured memory/element budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// Invalid scene specification (degenerate objects, out-of-extent placement).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Bad labels or malformed fixture data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace radbev
