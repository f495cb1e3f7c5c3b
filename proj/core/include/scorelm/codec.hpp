#ifndef SCORELM_CODEC_HPP
#define SCORELM_CODEC_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "scorelm/bpe.hpp"
#include "scorelm/chord.hpp"
#include "scorelm/score.hpp"
#include "scorelm/tokens.hpp"

namespace scorelm {

class CodecError : public std::runtime_error {
public:
    CodecError(const std::string& msg, int index)
        : std::runtime_error(msg + " (token index " + std::to_string(index) + ")"),
          index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

// Grammar state machine for the measure/track/position token grammar:
//   score    := BOS measure* EOS
//   measure  := BOM CHORD (CC posgroup+)* EOM
//   posgroup := POS note+
// Positions ascend strictly within a track; note tokens inherit the
// position of the preceding POS.
class DecoderState {
public:
    enum class Phase {
        MeasureOrEnd,  // after BOS or EOM: BOM_* or EOS
        Chord,         // after BOM: chord token
        TrackOrEom,    // after CHORD: CC or EOM
        FirstPos,      // after CC: a POS token
        Note,          // after POS: at least one pitch-set token
        NoteOrNext,    // after a note: more notes, next POS, CC or EOM
        Done,          // after EOS
    };

    Phase phase() const { return phase_; }
    int measure_ord() const { return measure_ord_; }
    int measure_len() const { return measure_len_; }
    int track_ord() const { return track_ord_; }
    int onset_ord() const { return onset_ord_; }
    int last_pos() const { return last_pos_; }

    bool admits(const EventToken& e) const;
    // Consumes an admissible event and returns the 3-D position triple
    // assigned to it. Throws CodecError otherwise.
    Pos3D advance(const EventToken& e, int at_index = -1);

    // Admissible-event mask over dense event ids [0, event_vocab).
    std::vector<char> event_mask(int event_vocab) const;

private:
    Phase phase_ = Phase::MeasureOrEnd;
    int measure_ord_ = 0;
    int measure_len_ = 0;
    int track_ord_ = 0;
    int onset_ord_ = 0;
    int last_pos_ = -1;
};

// Score -> token sequence. Serialization order: measures by time,
// tracks by score order (empty tracks omitted per measure), onsets
// ascending, concurrent tokens by ascending lowest pitch. Durations
// above 64 units clamp to 64.
TokenSeq encode(const QuantizedScore& score, const std::vector<ChordLabel>& chords,
                const MergeVocab& vocab);

struct DecodeResult {
    QuantizedScore score;
    std::vector<ChordLabel> chords;
};

// Token sequence -> score. Tracks are reassembled across measures by
// (instrument, per-measure ordinal among tracks of that instrument).
DecodeResult decode(const TokenSeq& tokens, const MergeVocab& vocab);

// Recomputes the 3-D position triples for a grammar-valid prefix of
// event tokens. BOS/EOS map to (0,0,0), measure-level tokens to
// (m,0,0), CC to (m,0,r), and POS plus the notes it governs to
// (m,o,r) with o the occupied-onset ordinal within the track.
std::vector<Pos3D> assign_positions(const std::vector<EventToken>& events);

// Validates per-tuple channel rules and the grammar; throws CodecError.
void validate(const TokenSeq& tokens);

}  // namespace scorelm

#endif
