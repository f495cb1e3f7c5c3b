#ifndef SCORELM_CHORD_HPP
#define SCORELM_CHORD_HPP

#include <array>
#include <string>
#include <vector>

#include "scorelm/score.hpp"

namespace scorelm {

// 11 qualities x 12 roots = 132 labeled chords, plus no-chord.
enum class ChordQuality {
    Maj, Min, Dim, Aug, Sus2, Sus4, Maj7, Min7, Dom7, Dim7, HalfDim7, None
};
constexpr int kNumQualities = 11;
constexpr int kNumChordLabels = 133;  // 132 + no-chord

struct ChordLabel {
    int root = -1;  // pitch class 0..11 (C = 0), -1 for no-chord
    ChordQuality quality = ChordQuality::None;

    bool is_none() const { return quality == ChordQuality::None; }
    // Dense index in [0, 133): labeled chords first, no-chord last.
    int index() const;
    static ChordLabel from_index(int idx);
    // Text form `[C_maj7]`, `[NC]` for no-chord.
    std::string to_text() const;
    static ChordLabel from_text(const std::string& text);

    friend bool operator==(const ChordLabel&, const ChordLabel&) = default;
};

// Interval pattern of a quality relative to its root.
const std::vector<int>& quality_intervals(ChordQuality q);

// Absolute pitch-class set of a labeled chord.
std::vector<int> chord_pitch_classes(const ChordLabel& label);

// Duration-weighted pitch-class evidence: weights[pc] >= 0.
using PitchClassWeights = std::array<double, 12>;

// Template matching over all 132 chords. Score of a template is the
// weighted coverage of its tones minus 0.5 times the weight outside it.
// Returns no-chord when fewer than 2 distinct template tones are
// present in the best match. Ties break toward the lower root, then
// the quality enum order.
ChordLabel detect_chord(const PitchClassWeights& weights);

// Pitch-class weights of one measure: per pitch class, total sounding
// duration within the measure across all non-percussion tracks.
PitchClassWeights measure_pitch_classes(const QuantizedScore& score, int measure_index);

// Chord labels for every measure of a score.
std::vector<ChordLabel> detect_score_chords(const QuantizedScore& score);

}  // namespace scorelm

#endif
