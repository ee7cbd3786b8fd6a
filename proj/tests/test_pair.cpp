// Copyright (C) 2026 The prefixlog Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prefixlog/error.hpp"
#include "prefixlog/kv_cache.hpp"
#include "prefixlog/pair.hpp"

using namespace prefixlog;

namespace {

struct Fig {
    PromptCodec codec;
    Demonstration arpt_cur = codec.make_demonstration("ARPT: 700311", "ARPT: <*>");
    Demonstration disk_cur = codec.make_demonstration("disk sda full", "disk <*> full");
    Demonstration ipv4_cur = codec.make_demonstration("IPV4 Addr: 10.0.0.1", "IPV4 Addr: <*>");
    Demonstration arpt_old = codec.make_demonstration("ARPT: 699911", "ARPT: <*>");
    Demonstration ipv4_old = codec.make_demonstration("IPV4 Addr: 10.2.3.4", "IPV4 Addr: <*>");
    Demonstration link_old = codec.make_demonstration("link eth0 down", "link <*> down");
    Demonstration fan_old = codec.make_demonstration("fan 3 failed", "fan <*> failed");

    DemonstrationSet current() const { return {arpt_cur, disk_cur, ipv4_cur}; }
    DemonstrationSet ds1() const { return {link_old, arpt_old, ipv4_old}; }
    DemonstrationSet ds2() const { return {ipv4_old, arpt_old, fan_old}; }
};

ICLEntry entry(const DemonstrationSet& ds) {
    return {0, ds, template_multiset(ds)};
}

}  // namespace

TEST(Pmc, Figure5Cases) {
    Fig f;
    const auto cur = template_multiset(f.current());
    EXPECT_EQ(compute_pmc(cur, entry(f.ds1())), 0u);
    EXPECT_EQ(compute_pmc(cur, entry(f.ds2())), 2u);
}

TEST(Pmc, FullMatch) {
    PromptCodec codec;
    DemonstrationSet ds;
    for (int i = 0; i < 5; ++i)
        ds.push_back(codec.make_demonstration("x " + std::to_string(i), "t" + std::to_string(i % 3)));
    auto shuffled = ds;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(compute_pmc(template_multiset(ds), entry(shuffled)), 5u);
}

TEST(Pmc, RespectsMultiplicity) {
    PromptCodec codec;
    const auto a = codec.make_demonstration("a 1", "a <*>");
    const auto b = codec.make_demonstration("b 1", "b <*>");
    EXPECT_EQ(compute_pmc(template_multiset({a, b, b}), entry({a, a, b})), 1u);
    EXPECT_EQ(compute_pmc(template_multiset({a, a, b}), entry({a, a, b})), 3u);
}

TEST(Pmc, MatchesBruteForce) {
    PromptCodec codec;
    std::mt19937_64 rng(5);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t n = 1 + rng() % 8;
        const std::size_t templates = 1 + rng() % 6;
        DemonstrationSet cur, cand;
        for (std::size_t i = 0; i < n; ++i) {
            cur.push_back(oracle::random_demo(codec, rng, templates));
            cand.push_back(oracle::random_demo(codec, rng, templates));
        }
        std::vector<TemplateId> cand_ids;
        for (const auto& d : cand)
            cand_ids.push_back(d.template_id);
        ASSERT_EQ(compute_pmc(template_multiset(cur), entry(cand)),
                  oracle::pmc(template_multiset(cur), cand_ids));
    }
}

TEST(MatchTarget, EmptyTableHasNoMatch) {
    Fig f;
    ICLTable table;
    EXPECT_FALSE(match_target(table, f.current()).has_value());
}

TEST(MatchTarget, PicksLargestPmc) {
    Fig f;
    ICLTable table;
    table.append(f.ds1());
    table.append(f.ds2());
    auto m = match_target(table, f.current());
    ASSERT_TRUE(m);
    EXPECT_EQ(m->pmc, 2u);
    EXPECT_EQ(m->entry->ds, f.ds2());
    // Order in the table does not matter for a strict maximum.
    ICLTable reversed;
    reversed.append(f.ds2());
    reversed.append(f.ds1());
    EXPECT_EQ(match_target(reversed, f.current())->entry->ds, f.ds2());
}

TEST(MatchTarget, AllZeroPmcIsNoMatch) {
    Fig f;
    ICLTable table;
    table.append(f.ds1());
    EXPECT_FALSE(match_target(table, f.current()).has_value());
}

TEST(MatchTarget, TieGoesToMostRecent) {
    PromptCodec codec;
    auto d = [&](const std::string& log, const std::string& t) {
        return codec.make_demonstration(log, t);
    };
    const DemonstrationSet current{d("a 1", "a <*>"), d("b 1", "b <*>"), d("c 1", "c <*>"),
                                   d("q 1", "q <*>")};
    const DemonstrationSet e1{d("a 2", "a <*>"), d("b 2", "b <*>"), d("c 2", "c <*>"),
                              d("z 1", "z <*>")};
    const DemonstrationSet e2{d("c 3", "c <*>"), d("a 3", "a <*>"), d("b 3", "b <*>"),
                              d("y 1", "y <*>")};
    for (int order = 0; order < 2; ++order) {
        ICLTable table;
        const auto& first = order == 0 ? e1 : e2;
        const auto& second = order == 0 ? e2 : e1;
        table.append(first);
        table.append(second);
        const auto m = match_target(table, current);
        ASSERT_TRUE(m);
        EXPECT_EQ(m->pmc, 3u);
        EXPECT_EQ(m->entry->ds, second);
    }
}

TEST(Modify, ReplacesSameTemplateDemonstration) {
    Fig f;
    const auto out = modify(f.current(), entry(f.ds2()), 2);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].log, "ARPT: 699911");
    EXPECT_EQ(out[0].tokens, f.arpt_old.tokens);
    EXPECT_EQ(out[1], f.disk_cur);
    EXPECT_EQ(out[2], f.ipv4_old);
}

TEST(Modify, FullReplacementIsTokenIdentical) {
    Fig f;
    const DemonstrationSet target{f.ipv4_old, f.arpt_old, f.disk_cur};
    const auto out = modify(f.current(), entry(target), 3);
    for (const auto& d : out)
        EXPECT_TRUE(std::find(target.begin(), target.end(), d) != target.end());
}

TEST(Modify, DuplicateTemplatesPairByOccurrence) {
    PromptCodec codec;
    const auto c1 = codec.make_demonstration("dup 1", "dup <*>");
    const auto c2 = codec.make_demonstration("dup 2", "dup <*>");
    const auto other = codec.make_demonstration("other x", "other <*>");
    const auto t1 = codec.make_demonstration("dup 8", "dup <*>");
    const auto t2 = codec.make_demonstration("dup 9", "dup <*>");
    const DemonstrationSet current{c1, other, c2};
    const auto out = modify(current, entry({t1, t2, other}), 2);

    // Enumerate both possible pairings of target occurrences to current slots.
    const std::vector<std::vector<std::size_t>> pairings{{0, 2}, {2, 0}};
    int matches = 0;
    std::size_t chosen = 99;
    for (std::size_t p = 0; p < pairings.size(); ++p) {
        auto expect = current;
        expect[pairings[p][0]] = t1;
        expect[pairings[p][1]] = t2;
        if (expect == out) {
            ++matches;
            chosen = p;
        }
    }
    EXPECT_EQ(matches, 1);
    EXPECT_EQ(chosen, 0u);  // occurrence order
    std::size_t replaced = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
        replaced += !(out[i] == current[i]);
    EXPECT_EQ(replaced, 2u);
}

TEST(Modify, ImpossiblePmcIsAnInternalError) {
    Fig f;
    EXPECT_THROW(modify(f.current(), entry(f.ds1()), 1), std::logic_error);
}

TEST(Reorder, Figure5Order) {
    PromptCodec codec;
    const auto d1 = codec.make_demonstration("one 1", "one <*>");
    const auto d2 = codec.make_demonstration("two 2", "two <*>");
    const auto d3 = codec.make_demonstration("three 3", "three <*>");
    const auto x = codec.make_demonstration("four 4", "four <*>");
    const ICLEntry target = entry({d3, d1, x});
    const auto out = reorder({d1, d2, d3}, target, 2);
    EXPECT_EQ(out, (DemonstrationSet{d3, d1, d2}));
}

TEST(Reorder, BoundaryPmc) {
    Fig f;
    EXPECT_EQ(reorder(f.current(), entry(f.ds2()), 0), f.current());
    const DemonstrationSet target{f.ipv4_cur, f.disk_cur, f.arpt_cur};
    EXPECT_EQ(reorder(f.current(), entry(target), 3), target);
}

TEST(Refine, EmptyTableAppends) {
    Fig f;
    ICLTable table;
    const auto r = refine(table, f.current());
    EXPECT_EQ(r.pmc, 0u);
    EXPECT_FALSE(r.matched);
    EXPECT_EQ(r.final_ds, f.current());
    EXPECT_EQ(table.size(), 1u);
}

TEST(Refine, RepeatHitsFullMatchRule) {
    Fig f;
    ICLTable table;
    refine(table, f.current());
    table.append(f.ds1());
    ASSERT_EQ(table.begin()->ds, f.current());
    const auto r = refine(table, f.current());
    EXPECT_EQ(r.pmc, 3u);
    EXPECT_EQ(r.final_ds, f.current());
    EXPECT_EQ(table.size(), 2u);
    EXPECT_EQ(std::prev(table.end())->ds, f.current());
}

TEST(Refine, FullMatchTakesTargetVerbatim) {
    Fig f;
    ICLTable table;
    const DemonstrationSet old{f.ipv4_old, f.disk_cur, f.arpt_old};
    table.append(old);
    const auto r = refine(table, f.current());
    EXPECT_EQ(r.pmc, 3u);
    EXPECT_EQ(r.final_ds, old);
    EXPECT_EQ(table.size(), 1u);
}

TEST(Refine, PartialMatchAppendsAndKeepsTargetPosition) {
    Fig f;
    ICLTable table;
    table.append(f.ds2());
    table.append(f.ds1());
    const auto target_id = table.begin()->id;
    const auto r = refine(table, f.current());
    EXPECT_EQ(r.pmc, 2u);
    EXPECT_EQ(r.reused_prefix_demos, 2u);
    EXPECT_EQ(r.final_ds, (DemonstrationSet{f.ipv4_old, f.arpt_old, f.disk_cur}));
    ASSERT_EQ(table.size(), 3u);
    EXPECT_EQ(table.begin()->id, target_id);
    EXPECT_EQ(std::prev(table.end())->ds, r.final_ds);
}

TEST(Refine, CapacityEvictsHead) {
    PromptCodec codec;
    ICLTable table(2);
    for (int i = 0; i < 3; ++i)
        refine(table, {codec.make_demonstration("u" + std::to_string(i), "u" + std::to_string(i))});
    EXPECT_EQ(table.size(), 2u);
    EXPECT_EQ(table.evictions(), 1u);
    EXPECT_EQ(table.begin()->ds[0].log, "u1");
}

TEST(Refine, CacheBenefitLowerBound) {
    PromptCodec codec;
    std::mt19937_64 rng(17);
    ICLTable table(64);
    PrefixCache cache(16);
    for (int t = 0; t < 500; ++t) {
        DemonstrationSet ds;
        for (int i = 0; i < 5; ++i)
            ds.push_back(oracle::random_demo(codec, rng, 6));
        const auto match = match_target(table, ds);
        const auto r = refine(table, ds);
        const auto tokens = render_prompt(codec.make_prompt(r.final_ds, "q " + std::to_string(t)));
        if (match) {
            std::size_t bound = codec.instruction()->tokens.size();
            for (std::size_t k = 0; k < r.pmc; ++k)
                bound += r.final_ds[k].tokens.size() + 1;
            EXPECT_GE(cache.lookup(tokens).hit_tokens, bound / 16 * 16);
        }
        cache.insert(tokens);
    }
}

TEST(IclTable, CapacityEstimate) {
    EXPECT_EQ(estimate_table_capacity(2048, 16, 100.0), 327u);
    EXPECT_EQ(estimate_table_capacity(1, 1, 1000.0), 1u);
    EXPECT_THROW(estimate_table_capacity(1, 1, 0.0), ArgumentError);
    EXPECT_THROW(ICLTable(0), ArgumentError);
}

TEST(IclTable, SaveLoadRoundTrip) {
    Fig f;
    ICLTable table(7);
    table.append(f.ds1());
    table.append(f.ds2());
    const auto path = std::filesystem::temp_directory_path() / "prefixlog_icl_test.json";
    save_icl_table(table, path);
    const auto loaded = load_icl_table(path, f.codec);
    std::filesystem::remove(path);
    EXPECT_EQ(loaded.capacity(), 7u);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded.begin()->ds, f.ds1());
    EXPECT_EQ(std::prev(loaded.end())->ds, f.ds2());
}

TEST(IclTable, LoadErrors) {
    PromptCodec codec;
    EXPECT_THROW(load_icl_table("/nonexistent.json", codec), IoError);
    const auto path = std::filesystem::temp_directory_path() / "prefixlog_icl_bad.json";
    std::ofstream(path) << "{\"entries\": 3}";
    EXPECT_THROW(load_icl_table(path, codec), FormatError);
    std::filesystem::remove(path);
}
