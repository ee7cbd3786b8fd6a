// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefixlog {

/// RFC 4180 table: quoted fields may contain separators, doubled quotes and
/// line breaks.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

/// Quotes a field only when it needs quoting.
std::string csv_escape(std::string_view field);

}  // namespace prefixlog
