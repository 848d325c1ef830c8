// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dualfield {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad argument or state).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Mismatched shapes or lengths between inputs that must agree.
class ContractError : public Error {
 public:
  using Error::Error;
};

enum class LoadErrorKind {
  kMissingManifest,
  kMalformedManifest,
  kMissingImage,
  kInvalidPose,
  kMixedResolution,
  kBadImage,
  kBadCheckpoint,
};

class LoadError : public Error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure reported by (or while reaching) an editing or embedding backend.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string endpoint = {},
               std::optional<std::size_t> view = std::nullopt)
      : Error(what), endpoint_(std::move(endpoint)), view_(view) {}
  const std::string& endpoint() const noexcept { return endpoint_; }
  std::optional<std::size_t> view() const noexcept { return view_; }

 private:
  std::string endpoint_;
  std::optional<std::size_t> view_;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualfield
