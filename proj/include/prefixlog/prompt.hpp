// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prefixlog {

using TokenId = std::uint32_t;
using TemplateId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

/// Reserved token ids. Ordinary fragments are interned after these.
namespace reserved {
inline constexpr TokenId kSeparator = 0;
inline constexpr TokenId kTemplateMarker = 1;
inline constexpr TokenId kCount = 2;
}  // namespace reserved

/// Thread-safe string interner. Ids are assigned in first-seen order, so two
/// processes that intern the same strings in the same order agree on ids.
class Interner {
public:
    explicit Interner(std::uint32_t first_id = 0);

    std::uint32_t intern(std::string_view text);
    /// Returns nullptr for unknown ids.
    const std::string* lookup(std::uint32_t id) const;
    std::size_t size() const;

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    mutable std::shared_mutex m_mutex;
    std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> m_ids;
    std::vector<std::string> m_strings;
    std::uint32_t m_first_id;
};

/// Splits on whitespace, then detaches leading and trailing punctuation
/// characters as single-character fragments.
std::vector<std::string_view> split_fragments(std::string_view text);

/// A piece of text together with its token ids.
struct Segment {
    std::string text;
    TokenSequence tokens;
};

struct Demonstration {
    std::string log;
    std::string template_text;
    TemplateId template_id = 0;
    /// tokens(log) ++ [template marker] ++ tokens(template)
    TokenSequence tokens;

    friend bool operator==(const Demonstration& a, const Demonstration& b) {
        return a.template_id == b.template_id && a.log == b.log &&
               a.template_text == b.template_text;
    }
};

using DemonstrationSet = std::vector<Demonstration>;

struct Prompt {
    std::shared_ptr<const Segment> instruction;
    DemonstrationSet ds;
    Segment query;
};

inline constexpr std::string_view kDefaultInstruction =
    "You will be provided with a log message delimited by backticks . "
    "You must abstract variables with ` <*> ` to extract the corresponding template . "
    "Print the input log's template delimited by backticks . "
    "Variables include numbers , identifiers , paths , addresses , sizes , durations , "
    "user names , host names and block identifiers ; keep every constant token unchanged "
    "and preserve the original punctuation and spacing of the message . "
    "Here are some labeled examples that show how logs map to their templates :";

/// Owns the token and template interners plus the shared instruction segment.
/// All prompt construction in a process goes through one codec so that token
/// equality means text equality.
class PromptCodec {
public:
    explicit PromptCodec(std::string instruction = std::string(kDefaultInstruction));

    TokenSequence tokenize(std::string_view text);
    TemplateId intern_template(std::string_view template_text);

    Demonstration make_demonstration(std::string log, std::string template_text);
    Segment make_segment(std::string text);
    Prompt make_prompt(DemonstrationSet ds, std::string query);

    const std::shared_ptr<const Segment>& instruction() const { return m_instruction; }
    const Interner& vocabulary() const { return m_tokens; }
    const Interner& templates() const { return m_templates; }

private:
    Interner m_tokens;
    Interner m_templates;
    std::shared_ptr<const Segment> m_instruction;
};

/// instruction ++ (demo ++ [sep]) for each demo ++ query
TokenSequence render_prompt(const Prompt& prompt);

/// Token count of render_prompt(prompt) without materializing it.
std::size_t rendered_length(const Prompt& prompt);

/// Length of the shared leading run of two sequences.
std::size_t common_prefix_length(std::span<const TokenId> a, std::span<const TokenId> b);

}  // namespace prefixlog
