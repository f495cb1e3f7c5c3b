#ifndef SCORELM_TOKENS_HPP
#define SCORELM_TOKENS_HPP

#include <string>
#include <vector>

#include "scorelm/chord.hpp"

namespace scorelm {

constexpr int kMaxDuration = 64;   // grid units; longer notes clamp
constexpr int kDurNull = 0;        // duration channel id for non-notes
constexpr int kInstMask = 129;     // instrument channel: masked input
constexpr int kInstNull = 130;     // instrument channel: not applicable

// Event vocabulary layout (dense ids):
//   0 BOS, 1 EOS, 2 EOM, 3 CC,
//   4..131   BOM_i   (i in [1,128])
//   132..264 CHORD_c (c in [0,133))
//   265..392 POS_j   (j in [0,128))
//   393+k    PS_k    (k indexes the merge vocab)
constexpr int kStructuralVocab = 393;

struct EventToken {
    enum class Kind { Bos, Eos, Eom, Cc, Bom, Chord, Pos, PitchSet };
    Kind kind = Kind::Bos;
    int value = 0;  // BOM: measure length; Chord: label index; Pos: onset; PitchSet: vocab id

    int id() const;
    static EventToken from_id(int id);
    std::string to_text() const;
    static EventToken from_text(const std::string& text);

    friend bool operator==(const EventToken&, const EventToken&) = default;
};

inline EventToken bos() { return {EventToken::Kind::Bos, 0}; }
inline EventToken eos() { return {EventToken::Kind::Eos, 0}; }
inline EventToken eom() { return {EventToken::Kind::Eom, 0}; }
inline EventToken cc() { return {EventToken::Kind::Cc, 0}; }
inline EventToken bom(int len) { return {EventToken::Kind::Bom, len}; }
inline EventToken chord_token(int label_index) { return {EventToken::Kind::Chord, label_index}; }
inline EventToken pos(int onset) { return {EventToken::Kind::Pos, onset}; }
inline EventToken pitchset(int vocab_id) { return {EventToken::Kind::PitchSet, vocab_id}; }

struct Pos3D {
    int measure = 0;  // 1-based measure ordinal, 0 for BOS/EOS
    int onset = 0;    // 1-based occupied-onset ordinal within (measure, track)
    int track = 0;    // 1-based per-measure track ordinal

    friend bool operator==(const Pos3D&, const Pos3D&) = default;
};

struct TokenTuple {
    EventToken event;
    int duration = kDurNull;    // DUR channel: 0 null, else [1,64]
    int track_ord = 0;          // 0 = not applicable
    int instrument = kInstNull; // 0..128, kInstMask, or kInstNull
    Pos3D pos;

    friend bool operator==(const TokenTuple&, const TokenTuple&) = default;
};

using TokenSeq = std::vector<TokenTuple>;

// Tab-separated text, one tuple per line:
//   event <TAB> dur <TAB> trk <TAB> inst <TAB> m <TAB> o <TAB> r
// dur is `-` when null; inst is `-` for null, `MASK` for masked.
std::string tokens_to_text(const TokenSeq& seq);
TokenSeq tokens_from_text(const std::string& text);

}  // namespace scorelm

#endif
