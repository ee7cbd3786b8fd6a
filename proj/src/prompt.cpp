// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "prefixlog/error.hpp"

namespace prefixlog {

Interner::Interner(std::uint32_t first_id) : m_first_id(first_id) {}

std::uint32_t Interner::intern(std::string_view text) {
    {
        std::shared_lock lock(m_mutex);
        if (auto it = m_ids.find(text); it != m_ids.end())
            return it->second;
    }
    std::unique_lock lock(m_mutex);
    if (auto it = m_ids.find(text); it != m_ids.end())
        return it->second;
    const auto id = static_cast<std::uint32_t>(m_first_id + m_strings.size());
    m_strings.emplace_back(text);
    m_ids.emplace(m_strings.back(), id);
    return id;
}

const std::string* Interner::lookup(std::uint32_t id) const {
    std::shared_lock lock(m_mutex);
    if (id < m_first_id || id - m_first_id >= m_strings.size())
        return nullptr;
    return &m_strings[id - m_first_id];
}

std::size_t Interner::size() const {
    std::shared_lock lock(m_mutex);
    return m_strings.size();
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string_view> split_fragments(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i]))
            ++i;
        std::size_t end = i;
        while (end < text.size() && !is_space(text[end]))
            ++end;
        if (end == i)
            break;
        std::string_view word = text.substr(i, end - i);
        i = end;

        std::size_t lead = 0;
        while (lead < word.size() && is_punct(word[lead]))
            ++lead;
        for (std::size_t k = 0; k < lead; ++k)
            out.push_back(word.substr(k, 1));
        if (lead == word.size())
            continue;

        std::size_t trail = word.size();
        while (trail > lead && is_punct(word[trail - 1]))
            --trail;
        out.push_back(word.substr(lead, trail - lead));
        for (std::size_t k = trail; k < word.size(); ++k)
            out.push_back(word.substr(k, 1));
    }
    return out;
}

PromptCodec::PromptCodec(std::string instruction)
    : m_tokens(reserved::kCount), m_templates(0) {
    auto seg = std::make_shared<Segment>();
    seg->tokens = tokenize(instruction);
    seg->text = std::move(instruction);
    m_instruction = std::move(seg);
}

TokenSequence PromptCodec::tokenize(std::string_view text) {
    TokenSequence out;
    for (auto fragment : split_fragments(text))
        out.push_back(m_tokens.intern(fragment));
    return out;
}

TemplateId PromptCodec::intern_template(std::string_view template_text) {
    return m_templates.intern(template_text);
}

Demonstration PromptCodec::make_demonstration(std::string log, std::string template_text) {
    Demonstration demo;
    demo.tokens = tokenize(log);
    demo.tokens.push_back(reserved::kTemplateMarker);
    auto tpl = tokenize(template_text);
    demo.tokens.insert(demo.tokens.end(), tpl.begin(), tpl.end());
    demo.template_id = intern_template(template_text);
    demo.log = std::move(log);
    demo.template_text = std::move(template_text);
    return demo;
}

Segment PromptCodec::make_segment(std::string text) {
    Segment seg;
    seg.tokens = tokenize(text);
    seg.text = std::move(text);
    return seg;
}

Prompt PromptCodec::make_prompt(DemonstrationSet ds, std::string query) {
    return Prompt{m_instruction, std::move(ds), make_segment(std::move(query))};
}

std::size_t rendered_length(const Prompt& prompt) {
    std::size_t n = prompt.instruction ? prompt.instruction->tokens.size() : 0;
    for (const auto& d : prompt.ds)
        n += d.tokens.size() + 1;
    return n + prompt.query.tokens.size();
}

TokenSequence render_prompt(const Prompt& prompt) {
    if (prompt.ds.empty())
        throw ArgumentError("render_prompt: demonstration set is empty");
    TokenSequence out;
    out.reserve(rendered_length(prompt));
    if (prompt.instruction)
        out.insert(out.end(), prompt.instruction->tokens.begin(), prompt.instruction->tokens.end());
    for (const auto& d : prompt.ds) {
        out.insert(out.end(), d.tokens.begin(), d.tokens.end());
        out.push_back(reserved::kSeparator);
    }
    out.insert(out.end(), prompt.query.tokens.begin(), prompt.query.tokens.end());
    return out;
}

std::size_t common_prefix_length(std::span<const TokenId> a, std::span<const TokenId> b) {
    auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    return static_cast<std::size_t>(ia - a.begin());
}

}  // namespace prefixlog
