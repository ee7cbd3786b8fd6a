// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include "prefixlog/pair.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "prefixlog/error.hpp"

namespace prefixlog {

TemplateMultiset template_multiset(const DemonstrationSet& ds) {
    TemplateMultiset out;
    out.reserve(ds.size());
    for (const auto& d : ds)
        out.push_back(d.template_id);
    std::sort(out.begin(), out.end());
    return out;
}

ICLTable::ICLTable(std::size_t capacity) : m_capacity(capacity) {
    if (capacity == 0)
        throw ArgumentError("ICLTable: capacity must be positive");
}

const ICLEntry& ICLTable::append(DemonstrationSet ds) {
    ICLEntry e;
    e.id = m_next_id++;
    e.template_ids = template_multiset(ds);
    e.ds = std::move(ds);
    m_entries.push_back(std::move(e));
    while (m_entries.size() > m_capacity) {
        m_entries.pop_front();
        ++m_evictions;
    }
    return m_entries.back();
}

void ICLTable::move_to_tail(const_iterator entry) {
    m_entries.splice(m_entries.end(), m_entries, entry);
}

std::size_t compute_pmc(const TemplateMultiset& current, const ICLEntry& candidate) {
    // Demonstration sets are short, so a used-flag scan beats a hash map.
    std::vector<char> used(current.size(), 0);
    std::size_t pmc = 0;
    for (const auto& d : candidate.ds) {
        auto it = std::lower_bound(current.begin(), current.end(), d.template_id);
        auto pos = static_cast<std::size_t>(it - current.begin());
        while (pos < current.size() && current[pos] == d.template_id && used[pos])
            ++pos;
        if (pos == current.size() || current[pos] != d.template_id)
            break;
        used[pos] = 1;
        ++pmc;
    }
    return pmc;
}

std::optional<TargetMatch> match_target(const ICLTable& table, const DemonstrationSet& current) {
    const auto multiset = template_multiset(current);
    std::optional<TargetMatch> best;
    // Walk from the tail so that the first maximum found is the most recent.
    for (auto it = table.end(); it != table.begin();) {
        --it;
        const std::size_t pmc = compute_pmc(multiset, *it);
        if (pmc > 0 && (!best || pmc > best->pmc))
            best = TargetMatch{it, pmc};
    }
    return best;
}

namespace {

// pairing[k] = position in `ds` paired with target demonstration k, by
// occurrence order of each template.
std::vector<std::size_t> pair_by_template(const DemonstrationSet& ds, const ICLEntry& target,
                                          std::size_t pmc) {
    if (pmc > target.ds.size())
        throw std::logic_error("pmc exceeds target length");
    std::vector<char> taken(ds.size(), 0);
    std::vector<std::size_t> pairing;
    pairing.reserve(pmc);
    for (std::size_t k = 0; k < pmc; ++k) {
        const auto tid = target.ds[k].template_id;
        std::size_t j = 0;
        while (j < ds.size() && (taken[j] || ds[j].template_id != tid))
            ++j;
        if (j == ds.size())
            throw std::logic_error("pmc exceeds the matchable prefix of the current set");
        taken[j] = 1;
        pairing.push_back(j);
    }
    return pairing;
}

}  // namespace

DemonstrationSet modify(const DemonstrationSet& current, const ICLEntry& target, std::size_t pmc) {
    DemonstrationSet out = current;
    const auto pairing = pair_by_template(current, target, pmc);
    for (std::size_t k = 0; k < pmc; ++k)
        out[pairing[k]] = target.ds[k];
    return out;
}

DemonstrationSet reorder(const DemonstrationSet& modified, const ICLEntry& target,
                         std::size_t pmc) {
    if (pmc == 0)
        return modified;
    const auto pairing = pair_by_template(modified, target, pmc);
    std::vector<char> moved(modified.size(), 0);
    DemonstrationSet out;
    out.reserve(modified.size());
    for (auto j : pairing) {
        out.push_back(modified[j]);
        moved[j] = 1;
    }
    for (std::size_t j = 0; j < modified.size(); ++j)
        if (!moved[j])
            out.push_back(modified[j]);
    return out;
}

RefinementResult refine(ICLTable& table, const DemonstrationSet& current) {
    RefinementResult result;
    const auto match = match_target(table, current);
    if (!match) {
        result.final_ds = current;
        table.append(current);
        return result;
    }
    result.matched = true;
    result.pmc = match->pmc;
    result.reused_prefix_demos = match->pmc;
    const ICLEntry& target = *match->entry;
    if (match->pmc == current.size() && target.ds.size() == current.size()) {
        result.final_ds = target.ds;
        table.move_to_tail(match->entry);
        return result;
    }
    result.final_ds = reorder(modify(current, target, match->pmc), target, match->pmc);
    table.append(result.final_ds);
    return result;
}

std::size_t estimate_table_capacity(std::size_t cache_blocks, std::size_t block_size,
                                    double mean_ds_tokens) {
    if (!(mean_ds_tokens > 0.0))
        throw ArgumentError("estimate_table_capacity: mean token length must be positive");
    const double cap = std::floor(static_cast<double>(cache_blocks * block_size) / mean_ds_tokens);
    return std::max<std::size_t>(1, static_cast<std::size_t>(cap));
}

void save_icl_table(const ICLTable& table, const std::filesystem::path& path) {
    nlohmann::json j;
    j["capacity"] = table.capacity();
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : table) {
        auto demos = nlohmann::json::array();
        for (const auto& d : e.ds)
            demos.push_back({{"log", d.log}, {"template", d.template_text}});
        entries.push_back({{"demos", std::move(demos)}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ICLTable load_icl_table(const std::filesystem::path& path, PromptCodec& codec) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        ICLTable table(j.at("capacity").get<std::size_t>());
        for (const auto& e : j.at("entries")) {
            DemonstrationSet ds;
            for (const auto& d : e.at("demos"))
                ds.push_back(codec.make_demonstration(d.at("log").get<std::string>(),
                                                      d.at("template").get<std::string>()));
            table.append(std::move(ds));
        }
        return table;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("icl table " + path.string() + ": " + ex.what());
    }
}

}  // namespace prefixlog
