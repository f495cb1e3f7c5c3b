#include "scorelm/chord.hpp"

#include <algorithm>
#include <stdexcept>

namespace scorelm {

namespace {

const char* kQualityNames[kNumQualities] = {
    "maj", "min", "dim", "aug", "sus2", "sus4", "maj7", "min7", "dom7", "dim7", "halfdim7"};

const char* kRootNames[12] = {"C",  "Db", "D",  "Eb", "E",  "F",
                              "Gb", "G",  "Ab", "A",  "Bb", "B"};

const std::vector<int> kIntervals[kNumQualities] = {
    {0, 4, 7},      // maj
    {0, 3, 7},      // min
    {0, 3, 6},      // dim
    {0, 4, 8},      // aug
    {0, 2, 7},      // sus2
    {0, 5, 7},      // sus4
    {0, 4, 7, 11},  // maj7
    {0, 3, 7, 10},  // min7
    {0, 4, 7, 10},  // dom7
    {0, 3, 6, 9},   // dim7
    {0, 3, 6, 10},  // halfdim7
};

}  // namespace

int ChordLabel::index() const {
    if (is_none()) return kNumChordLabels - 1;
    return root * kNumQualities + static_cast<int>(quality);
}

ChordLabel ChordLabel::from_index(int idx) {
    if (idx < 0 || idx >= kNumChordLabels) throw std::out_of_range("chord index");
    if (idx == kNumChordLabels - 1) return {};
    return {idx / kNumQualities, static_cast<ChordQuality>(idx % kNumQualities)};
}

std::string ChordLabel::to_text() const {
    if (is_none()) return "[NC]";
    return std::string("[") + kRootNames[root] + "_" +
           kQualityNames[static_cast<int>(quality)] + "]";
}

ChordLabel ChordLabel::from_text(const std::string& text) {
    if (text == "[NC]") return {};
    if (text.size() < 4 || text.front() != '[' || text.back() != ']')
        throw std::invalid_argument("bad chord token: " + text);
    std::string body = text.substr(1, text.size() - 2);
    auto sep = body.find('_');
    if (sep == std::string::npos) throw std::invalid_argument("bad chord token: " + text);
    std::string root_s = body.substr(0, sep), qual_s = body.substr(sep + 1);
    for (int r = 0; r < 12; ++r)
        if (root_s == kRootNames[r])
            for (int q = 0; q < kNumQualities; ++q)
                if (qual_s == kQualityNames[q]) return {r, static_cast<ChordQuality>(q)};
    throw std::invalid_argument("bad chord token: " + text);
}

const std::vector<int>& quality_intervals(ChordQuality q) {
    return kIntervals[static_cast<int>(q)];
}

std::vector<int> chord_pitch_classes(const ChordLabel& label) {
    if (label.is_none()) return {};
    std::vector<int> pcs;
    for (int iv : quality_intervals(label.quality)) pcs.push_back((label.root + iv) % 12);
    std::sort(pcs.begin(), pcs.end());
    return pcs;
}

ChordLabel detect_chord(const PitchClassWeights& weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) return {};

    ChordLabel best;
    double best_score = 0;
    int best_covered = 0;
    for (int root = 0; root < 12; ++root) {
        for (int q = 0; q < kNumQualities; ++q) {
            // Sum in ascending pitch-class order so that labels spelling
            // the same set (augmented triads, diminished sevenths) get
            // bit-identical scores and the tie-break below stays exact.
            bool member[12] = {};
            for (int iv : kIntervals[q]) member[(root + iv) % 12] = true;
            double in = 0;
            int covered = 0;
            for (int pc = 0; pc < 12; ++pc) {
                if (!member[pc]) continue;
                double w = weights[pc];
                in += w;
                if (w > 0) ++covered;
            }
            double score = in - 0.5 * (total - in);
            if (best.is_none() || score > best_score) {
                best = {root, static_cast<ChordQuality>(q)};
                best_score = score;
                best_covered = covered;
            }
        }
    }
    if (best_covered < 2) return {};
    return best;
}

PitchClassWeights measure_pitch_classes(const QuantizedScore& score, int measure_index) {
    if (measure_index < 0 || measure_index >= static_cast<int>(score.measures.size()))
        throw std::out_of_range("measure index");
    int start = score.measure_start(measure_index);
    int end = start + score.measures[measure_index];
    PitchClassWeights weights{};
    for (const auto& tr : score.tracks) {
        if (tr.instrument == kPercussion) continue;
        for (const auto& n : tr.notes) {
            int lo = std::max(n.onset, start);
            int hi = std::min(n.onset + n.duration, end);
            if (hi > lo) weights[n.pitch % 12] += hi - lo;
        }
    }
    return weights;
}

std::vector<ChordLabel> detect_score_chords(const QuantizedScore& score) {
    std::vector<ChordLabel> chords;
    chords.reserve(score.measures.size());
    for (size_t m = 0; m < score.measures.size(); ++m)
        chords.push_back(detect_chord(measure_pitch_classes(score, static_cast<int>(m))));
    return chords;
}

}  // namespace scorelm
