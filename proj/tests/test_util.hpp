#ifndef SCORELM_TEST_UTIL_HPP
#define SCORELM_TEST_UTIL_HPP

#include <algorithm>
#include <random>
#include <vector>

#include "scorelm/score.hpp"

namespace scorelm_test {

inline constexpr int kMaxDurationForTests = 64;

// Random canonical score suitable for exact roundtrip checks:
//  - distinct instruments, so track identity survives the token grammar
//  - every track has a note in measure 1, fixing track discovery order
//  - no two same-pitch notes overlap in time within a track, so MIDI
//    note-off pairing is unambiguous
//  - durations at most 64 units and no note past the final barline
inline scorelm::QuantizedScore random_score(std::mt19937_64& rng, int max_tracks = 8,
                                            int max_measures = 16) {
    using namespace scorelm;
    QuantizedScore score;

    int n_measures = 1 + static_cast<int>(rng() % max_measures);
    for (int m = 0; m < n_measures; ++m) {
        // mostly 4/4, occasionally an irregular length
        int len = (rng() % 10 < 7) ? 32 : 1 + static_cast<int>(rng() % kMaxMeasureLen);
        score.measures.push_back(len);
    }
    const int total = score.total_len();

    int n_tracks = 1 + static_cast<int>(rng() % max_tracks);
    std::vector<int> programs(kPercussion + 1);
    for (int i = 0; i <= kPercussion; ++i) programs[i] = i;
    std::shuffle(programs.begin(), programs.end(), rng);

    for (int t = 0; t < n_tracks; ++t) {
        Track track;
        track.instrument = programs[t];
        std::vector<int> busy_until(128, 0);  // per pitch, within this track

        int notes_wanted = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < notes_wanted; ++i) {
            // the first note anchors the track in measure 1
            int onset = (i == 0) ? static_cast<int>(rng() % score.measures[0])
                                 : static_cast<int>(rng() % total);
            int pitch = static_cast<int>(rng() % 128);
            if (onset < busy_until[pitch]) continue;
            int dur = 1 + static_cast<int>(rng() % kMaxDurationForTests);
            dur = std::min(dur, total - onset);
            if (dur < 1) continue;
            track.notes.push_back({pitch, onset, dur, 80});
            busy_until[pitch] = onset + dur;
        }
        if (track.notes.empty())
            track.notes.push_back({60 + t, 0, 1, 80});
        score.tracks.push_back(track);
    }
    canonicalize(score);
    return score;
}

}  // namespace scorelm_test

#endif
