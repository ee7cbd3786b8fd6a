// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace prefixlog {

/// Selects the serial reference or the OpenMP kernel. Both produce identical
/// results; the serial path exists for testing and benchmarking.
enum class Exec { serial, parallel };

}  // namespace prefixlog
