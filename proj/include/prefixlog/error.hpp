// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace prefixlog {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (missing columns, bad JSON schema, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Loss or gradient became non-finite during training.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration is invalid or incomplete.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace prefixlog
