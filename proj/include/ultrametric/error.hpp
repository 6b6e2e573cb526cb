// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ultrametric {

// A caller handed in arguments that violate an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment configuration. The message lists every violated
// constraint, one per line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed (eigensolver non-convergence, fixed point that
// did not converge, integration blow-up).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ultrametric
