#ifndef SCORELM_SCORE_HPP
#define SCORELM_SCORE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace scorelm {

// All times are in 32nd-note grid units. A 4/4 measure spans 32 units.
constexpr int kGridPerQuarter = 8;
constexpr int kMaxMeasureLen = 128;
constexpr int kMaxTracks = 32;
constexpr int kPercussion = 128;  // pseudo-program for MIDI channel 10

struct NoteEvent {
    int pitch = 0;     // 0..127
    int onset = 0;     // grid units from piece start
    int duration = 1;  // grid units, >= 1
    int velocity = 80; // carried through ingestion, never modeled

    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

// Sort key ignores velocity: canonical order is (onset, pitch, duration).
inline bool note_less(const NoteEvent& a, const NoteEvent& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.duration < b.duration;
}

struct Track {
    int instrument = 0;  // GM program 0..127, 128 = percussion kit
    std::vector<NoteEvent> notes;

    friend bool operator==(const Track&, const Track&) = default;
};

struct QuantizedScore {
    std::vector<Track> tracks;
    std::vector<int> measures;  // measure lengths in grid units, each in [1,128]

    int total_len() const {
        int t = 0;
        for (int m : measures) t += m;
        return t;
    }
    int note_count() const {
        int n = 0;
        for (const auto& tr : tracks) n += static_cast<int>(tr.notes.size());
        return n;
    }
    // Measure index containing grid position `pos`, or -1 past the end.
    int measure_at(int pos) const;
    // Grid position of the start of measure m.
    int measure_start(int m) const;

    friend bool operator==(const QuantizedScore&, const QuantizedScore&) = default;
};

// Sorts each track's notes by (onset, pitch, duration) and removes
// duplicates equal in that key (the first occurrence wins).
void canonicalize(QuantizedScore& score);

bool is_canonical(const QuantizedScore& score);

// Content hash of the quantized note multiset, used for corpus dedup.
// Instrument and velocity do not participate.
uint64_t content_hash(const QuantizedScore& score);

// Plain-text score cache format (one score per file):
//   measures <len> <len> ...
//   track <instrument>
//   note <pitch> <onset> <duration> <velocity>
std::string score_to_text(const QuantizedScore& score);
QuantizedScore score_from_text(const std::string& text);

}  // namespace scorelm

#endif
