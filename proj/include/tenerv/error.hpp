// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tenerv {

// Base of all library errors so callers can catch tenerv failures as one family.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes / axes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An index (frame, GoP, grid position) is out of its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (even kernel, bad loss mix, infeasible partition...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse: backward on a non-scalar, stepping without gradients, double activation.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Degenerate or non-finite data where finite values are required.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed external input (Y4M, CSV); message carries a byte offset when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Entropy-coded payload cannot be decoded (truncated or inconsistent).
class StreamError : public Error {
 public:
  using Error::Error;
};

// Container-level failure: bad magic, unsupported version, CRC mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A numeric procedure has no valid answer (e.g. BD-rate without quality overlap).
class ComputationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tenerv
