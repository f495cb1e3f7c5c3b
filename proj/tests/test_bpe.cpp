#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "scorelm/bpe.hpp"

using namespace scorelm;

namespace {

Mulpi mulpi(std::vector<uint8_t> pitches) {
    Mulpi m;
    m.pitches = std::move(pitches);
    return m;
}

std::vector<Mulpi> random_bag(std::mt19937_64& rng, int count) {
    std::vector<Mulpi> bag;
    for (int i = 0; i < count; ++i) {
        int size = 2 + static_cast<int>(rng() % 9);
        std::set<uint8_t> pitches;
        while (static_cast<int>(pitches.size()) < size)
            pitches.insert(static_cast<uint8_t>(rng() % 128));
        bag.push_back(mulpi({pitches.begin(), pitches.end()}));
    }
    return bag;
}

bool same_merges(const MergeVocab& a, const MergeVocab& b) {
    if (a.merge_count() != b.merge_count()) return false;
    for (int k = 0; k < a.merge_count(); ++k)
        if (a.merge(k).left != b.merge(k).left || a.merge(k).right != b.merge(k).right)
            return false;
    return true;
}

}  // namespace

TEST_CASE("fresh vocab has the 128 singleton sets") {
    MergeVocab v;
    CHECK(v.size() == kBaseVocab);
    CHECK(v.merge_count() == 0);
    CHECK(v.expand(0) == std::vector<uint8_t>{0});
    CHECK(v.expand(127) == std::vector<uint8_t>{127});
    CHECK(v.apply({60, 64, 67}) == std::vector<int>{60, 64, 67});
}

TEST_CASE("training on a small bag merges the most frequent pair first") {
    // three C major triads against two {62,65} dyads; every triad pair
    // has count 3, the dyad count 2, and ({60},{64}) wins the tie as
    // the lexicographically smallest pair
    std::vector<Mulpi> bag = {mulpi({60, 64, 67}), mulpi({60, 64, 67}),
                              mulpi({60, 64, 67}), mulpi({62, 65}), mulpi({62, 65})};
    MergeVocab v = train(bag, kBaseVocab + 2);
    REQUIRE(v.merge_count() == 2);
    CHECK(v.merge(0).left == 60);
    CHECK(v.merge(0).right == 64);
    CHECK(v.merge(1).left == kBaseVocab);      // {60,64}
    CHECK(v.merge(1).right == 67);
    CHECK(v.expand(kBaseVocab + 1) == std::vector<uint8_t>{60, 64, 67});

    CHECK(v.apply({60, 64, 67}) == std::vector<int>{kBaseVocab + 1});
    CHECK(v.apply({60, 64}) == std::vector<int>{kBaseVocab});
    CHECK(v.apply({60, 67}) == std::vector<int>{60, 67});
    CHECK(v.apply({62, 65}) == std::vector<int>{62, 65});
    // an unrelated pitch rides along as a singleton, ordered by lowest pitch
    CHECK(v.apply({59, 60, 64, 67}) == std::vector<int>{59, kBaseVocab + 1});
    CHECK(v.apply({60, 61, 64, 67}) == std::vector<int>{kBaseVocab + 1, 61});
}

TEST_CASE("min_freq stops merging rare pairs") {
    std::vector<Mulpi> bag = {mulpi({10, 20}), mulpi({30, 40})};
    CHECK(train(bag, kBaseVocab + 16).merge_count() == 0);         // default min_freq 2
    CHECK(train(bag, kBaseVocab + 16, 1).merge_count() > 0);
}

TEST_CASE("add_merge rejects overlapping sets") {
    MergeVocab v;
    int ce = v.add_merge(60, 64);
    CHECK(ce == kBaseVocab);
    CHECK_THROWS(v.add_merge(ce, 60));
    CHECK_THROWS(v.add_merge(ce, ce));
}

TEST_CASE("apply partitions its input exactly") {
    std::mt19937_64 rng(41);
    auto bag = random_bag(rng, 800);
    MergeVocab v = train(bag, kBaseVocab + 40);
    for (int i = 0; i < 200; ++i) {
        const auto& pitches = bag[rng() % bag.size()].pitches;
        auto tokens = v.apply(pitches);
        std::vector<uint8_t> rebuilt;
        int last_low = -1;
        for (int tok : tokens) {
            const auto& set = v.expand(tok);
            CHECK(set.front() > last_low);  // sorted by lowest contained pitch
            last_low = set.front();
            rebuilt.insert(rebuilt.end(), set.begin(), set.end());
        }
        std::sort(rebuilt.begin(), rebuilt.end());
        CHECK(rebuilt == pitches);
    }
}

TEST_CASE("incremental trainer matches the recount reference") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        auto bag = random_bag(rng, 300);
        MergeVocab fast = train(bag, kBaseVocab + 25);
        MergeVocab slow = train_reference(bag, kBaseVocab + 25);
        CHECK(same_merges(fast, slow));
    }
}

TEST_CASE("vocab file roundtrip") {
    std::mt19937_64 rng(47);
    auto bag = random_bag(rng, 500);
    MergeVocab v = train(bag, kBaseVocab + 30);
    MergeVocab back = MergeVocab::from_text(v.to_text());
    CHECK(same_merges(v, back));
    CHECK(back.to_text() == v.to_text());

    MergeVocab tiny;
    tiny.add_merge(60, 64);
    tiny.add_merge(kBaseVocab, 67);
    CHECK(tiny.to_text() == "60|64\n60,64|67\n");
}

TEST_CASE("extract_mulpies groups by track, onset and duration") {
    QuantizedScore s;
    s.measures = {32};
    s.tracks.push_back({0, {{60, 0, 8, 80}, {64, 0, 8, 80}, {67, 0, 8, 80},
                            {72, 0, 4, 80},     // different duration
                            {48, 8, 8, 80}}});  // lone note, no group
    s.tracks.push_back({1, {{60, 0, 8, 80}, {65, 0, 8, 80}}});

    auto bag = extract_mulpies(s);
    REQUIRE(bag.size() == 2);
    std::vector<std::vector<uint8_t>> sets;
    for (const auto& m : bag) sets.push_back(m.pitches);
    std::sort(sets.begin(), sets.end());
    CHECK(sets[0] == std::vector<uint8_t>{60, 64, 67});
    CHECK(sets[1] == std::vector<uint8_t>{60, 65});
}
