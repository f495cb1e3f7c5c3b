#ifndef SCORELM_BPE_HPP
#define SCORELM_BPE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "scorelm/score.hpp"

namespace scorelm {

constexpr int kBaseVocab = 128;  // singleton pitch sets

// A maximal set (>= 2) of notes sharing track, onset and duration:
// the "word" unit of the concurrence BPE.
struct Mulpi {
    std::vector<uint8_t> pitches;  // sorted ascending, distinct
    // provenance, for debugging only
    int track = -1;
    int onset = -1;
    int duration = -1;
};

// Ordered merge list over pitch sets. Token ids: 0..127 are the
// singleton sets {0}..{127}; id 128+k is the result of merge rank k.
struct MergeRule {
    int left;   // token id, lower rank or base
    int right;  // token id, lower rank or base
};

class MergeVocab {
public:
    MergeVocab();

    int size() const { return kBaseVocab + static_cast<int>(merges_.size()); }
    int merge_count() const { return static_cast<int>(merges_.size()); }
    const MergeRule& merge(int rank) const { return merges_[rank]; }

    // Pitch set of a token id; singleton sets for ids < 128.
    const std::vector<uint8_t>& expand(int token) const;

    // Appends a merge of two existing tokens with disjoint sets.
    // Returns the new token id.
    int add_merge(int left, int right);

    // Splits a pitch set into vocab tokens: singleton start, merges
    // replayed in rank order, result sorted by lowest contained pitch.
    std::vector<int> apply(const std::vector<uint8_t>& pitches) const;

    // Vocab file: line k is the rank-k merge `60,64|67` (left and right
    // pitch sets, ascending, separated by '|'). Singletons implicit.
    std::string to_text() const;
    static MergeVocab from_text(const std::string& text);

private:
    std::vector<MergeRule> merges_;
    std::vector<std::vector<uint8_t>> sets_;  // per token id
};

// Groups a score's notes by (track, onset, duration); only groups of
// two or more notes enter the training bag.
std::vector<Mulpi> extract_mulpies(const QuantizedScore& score);

// Algorithm: start from singleton partitions, repeatedly merge the
// most frequent concurrent token pair, updating the pair index
// incrementally. Stops at vocab size n, empty index, or best count
// below min_freq. Ties break toward the lexicographically smallest
// pair of pitch sets (left <= right).
MergeVocab train(const std::vector<Mulpi>& bag, int n, int min_freq = 2);

// Reference trainer: recounts every pair from scratch before each
// merge. Identical output to train(); test oracle, no performance
// contract.
MergeVocab train_reference(const std::vector<Mulpi>& bag, int n, int min_freq = 2);

}  // namespace scorelm

#endif
