#include "scorelm/codec.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace scorelm {

bool DecoderState::admits(const EventToken& e) const {
    using K = EventToken::Kind;
    switch (phase_) {
        case Phase::MeasureOrEnd:
            return (e.kind == K::Bom && e.value >= 1 && e.value <= kMaxMeasureLen) ||
                   e.kind == K::Eos;
        case Phase::Chord:
            return e.kind == K::Chord && e.value >= 0 && e.value < kNumChordLabels;
        case Phase::TrackOrEom:
            return e.kind == K::Cc || e.kind == K::Eom;
        case Phase::FirstPos:
            return e.kind == K::Pos && e.value >= 0 && e.value < measure_len_;
        case Phase::Note:
            return e.kind == K::PitchSet && e.value >= 0;
        case Phase::NoteOrNext:
            if (e.kind == K::PitchSet && e.value >= 0) return true;
            if (e.kind == K::Pos) return e.value > last_pos_ && e.value < measure_len_;
            return e.kind == K::Cc || e.kind == K::Eom;
        case Phase::Done:
            return false;
    }
    return false;
}

Pos3D DecoderState::advance(const EventToken& e, int at_index) {
    if (!admits(e)) {
        const char* expected = "";
        switch (phase_) {
            case Phase::MeasureOrEnd: expected = "BOM or EOS"; break;
            case Phase::Chord: expected = "a chord token"; break;
            case Phase::TrackOrEom: expected = "CC or EOM"; break;
            case Phase::FirstPos: expected = "POS below the measure length"; break;
            case Phase::Note: expected = "a pitch-set token"; break;
            case Phase::NoteOrNext: expected = "pitch-set, ascending POS, CC or EOM"; break;
            case Phase::Done: expected = "nothing (sequence closed)"; break;
        }
        throw CodecError("grammar violation at '" + e.to_text() + "', expected " + expected,
                         at_index);
    }
    using K = EventToken::Kind;
    switch (e.kind) {
        case K::Bos:
            return {0, 0, 0};  // unreachable through admits, kept for symmetry
        case K::Eos:
            phase_ = Phase::Done;
            return {0, 0, 0};
        case K::Bom:
            ++measure_ord_;
            measure_len_ = e.value;
            track_ord_ = 0;
            phase_ = Phase::Chord;
            return {measure_ord_, 0, 0};
        case K::Chord:
            phase_ = Phase::TrackOrEom;
            return {measure_ord_, 0, 0};
        case K::Eom:
            phase_ = Phase::MeasureOrEnd;
            return {measure_ord_, 0, 0};
        case K::Cc:
            ++track_ord_;
            onset_ord_ = 0;
            last_pos_ = -1;
            phase_ = Phase::FirstPos;
            return {measure_ord_, 0, track_ord_};
        case K::Pos:
            last_pos_ = e.value;
            ++onset_ord_;
            phase_ = Phase::Note;
            return {measure_ord_, onset_ord_, track_ord_};
        case K::PitchSet:
            phase_ = Phase::NoteOrNext;
            return {measure_ord_, onset_ord_, track_ord_};
    }
    throw std::logic_error("bad event kind");
}

std::vector<char> DecoderState::event_mask(int event_vocab) const {
    std::vector<char> mask(event_vocab, 0);
    auto set = [&](const EventToken& e) {
        int id = e.id();
        if (id < event_vocab) mask[id] = 1;
    };
    switch (phase_) {
        case Phase::MeasureOrEnd:
            for (int i = 1; i <= kMaxMeasureLen; ++i) set(bom(i));
            set(eos());
            break;
        case Phase::Chord:
            for (int c = 0; c < kNumChordLabels; ++c) set(chord_token(c));
            break;
        case Phase::TrackOrEom:
            set(cc());
            set(eom());
            break;
        case Phase::FirstPos:
            for (int j = 0; j < measure_len_; ++j) set(pos(j));
            break;
        case Phase::Note:
            for (int id = kStructuralVocab; id < event_vocab; ++id) mask[id] = 1;
            break;
        case Phase::NoteOrNext:
            for (int id = kStructuralVocab; id < event_vocab; ++id) mask[id] = 1;
            for (int j = last_pos_ + 1; j < measure_len_; ++j) set(pos(j));
            set(cc());
            set(eom());
            break;
        case Phase::Done:
            break;
    }
    return mask;
}

TokenSeq encode(const QuantizedScore& score, const std::vector<ChordLabel>& chords,
                const MergeVocab& vocab) {
    for (int len : score.measures)
        if (len < 1 || len > kMaxMeasureLen)
            throw std::invalid_argument("measure length out of range [1,128]");
    if (score.tracks.size() > kMaxTracks)
        throw std::invalid_argument("track count above " + std::to_string(kMaxTracks));
    if (chords.size() != score.measures.size())
        throw std::invalid_argument("chord list length must match measure count");

    TokenSeq out;
    DecoderState st;
    auto emit = [&](TokenTuple t) {
        t.pos = st.advance(t.event, static_cast<int>(out.size()));
        out.push_back(t);
    };
    out.push_back({bos(), kDurNull, 0, kInstNull, {0, 0, 0}});

    for (size_t m = 0; m < score.measures.size(); ++m) {
        int start = score.measure_start(static_cast<int>(m));
        int end = start + score.measures[m];
        emit({bom(score.measures[m]), kDurNull, 0, kInstNull});
        emit({chord_token(chords[m].index()), kDurNull, 0, kInstNull});

        int track_ord = 0;
        for (const auto& tr : score.tracks) {
            // (onset, duration) -> pitch set, within this measure
            std::map<std::pair<int, int>, std::vector<uint8_t>> groups;
            for (const auto& n : tr.notes) {
                if (n.onset < start || n.onset >= end) continue;
                int dur = std::min(n.duration, kMaxDuration);
                groups[{n.onset, dur}].push_back(static_cast<uint8_t>(n.pitch));
            }
            if (groups.empty()) continue;
            ++track_ord;
            emit({cc(), kDurNull, track_ord, tr.instrument});
            int current_onset = -1;
            // Tokens at one onset: (lowest pitch, duration, vocab id)
            std::vector<std::tuple<int, int, int>> at_onset;
            auto flush = [&] {
                std::sort(at_onset.begin(), at_onset.end());
                for (auto [lowest, dur, id] : at_onset)
                    emit({pitchset(id), dur, track_ord, tr.instrument});
                at_onset.clear();
            };
            for (auto& [key, pitches] : groups) {
                auto [onset, dur] = key;
                if (onset != current_onset) {
                    flush();
                    emit({pos(onset - start), kDurNull, track_ord, kInstNull});
                    current_onset = onset;
                }
                std::sort(pitches.begin(), pitches.end());
                pitches.erase(std::unique(pitches.begin(), pitches.end()), pitches.end());
                for (int id : vocab.apply(pitches))
                    at_onset.push_back({vocab.expand(id)[0], dur, id});
            }
            flush();
        }
        emit({eom(), kDurNull, 0, kInstNull});
    }
    emit({eos(), kDurNull, 0, kInstNull});
    return out;
}

void validate(const TokenSeq& tokens) {
    if (tokens.empty() || tokens.front().event.kind != EventToken::Kind::Bos)
        throw CodecError("sequence must start with BOS", 0);
    if (tokens.front().pos != Pos3D{0, 0, 0})
        throw CodecError("BOS position must be (0,0,0)", 0);
    DecoderState st;
    for (size_t i = 1; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        Pos3D pos = st.advance(t.event, static_cast<int>(i));
        if (t.pos != pos) throw CodecError("position triple inconsistent with grammar state",
                                           static_cast<int>(i));
        bool is_note = t.event.kind == EventToken::Kind::PitchSet;
        bool is_cc = t.event.kind == EventToken::Kind::Cc;
        if (is_note != (t.duration != kDurNull))
            throw CodecError("duration channel must be set exactly on pitch-set tokens",
                             static_cast<int>(i));
        if (is_note && (t.duration < 1 || t.duration > kMaxDuration))
            throw CodecError("duration out of range [1,64]", static_cast<int>(i));
        if ((is_note || is_cc) == (t.instrument == kInstNull))
            throw CodecError("instrument channel must be set exactly on CC and pitch-set tokens",
                             static_cast<int>(i));
    }
    if (tokens.back().event.kind != EventToken::Kind::Eos)
        throw CodecError("sequence must end with EOS", static_cast<int>(tokens.size()) - 1);
}

DecodeResult decode(const TokenSeq& tokens, const MergeVocab& vocab) {
    validate(tokens);
    DecodeResult result;
    // Global tracks are keyed by (instrument, ordinal among CC groups of
    // that instrument within a measure).
    std::map<std::pair<int, int>, int> track_of;  // key -> index in result.score.tracks
    std::map<int, int> inst_seen_in_measure;      // instrument -> count this measure

    int measure_start = 0;
    int measure_len = 0;
    int current_track = -1;
    int current_pos = -1;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        using K = EventToken::Kind;
        switch (t.event.kind) {
            case K::Bos:
            case K::Eos:
                break;
            case K::Bom:
                measure_start = result.score.total_len();
                measure_len = t.event.value;
                result.score.measures.push_back(measure_len);
                inst_seen_in_measure.clear();
                break;
            case K::Chord:
                result.chords.push_back(ChordLabel::from_index(t.event.value));
                break;
            case K::Eom:
                break;
            case K::Cc: {
                int inst = t.instrument;
                if (inst < 0 || inst > kPercussion)
                    throw CodecError("CC instrument out of range", static_cast<int>(i));
                int ordinal = inst_seen_in_measure[inst]++;
                auto key = std::make_pair(inst, ordinal);
                auto it = track_of.find(key);
                if (it == track_of.end()) {
                    result.score.tracks.push_back({inst, {}});
                    it = track_of.emplace(key, result.score.tracks.size() - 1).first;
                }
                current_track = it->second;
                break;
            }
            case K::Pos:
                current_pos = t.event.value;
                break;
            case K::PitchSet: {
                if (t.event.value >= vocab.size())
                    throw CodecError("pitch-set id outside the vocabulary",
                                     static_cast<int>(i));
                for (uint8_t p : vocab.expand(t.event.value))
                    result.score.tracks[current_track].notes.push_back(
                        {p, measure_start + current_pos, t.duration, 80});
                break;
            }
        }
    }
    canonicalize(result.score);
    return result;
}

std::vector<Pos3D> assign_positions(const std::vector<EventToken>& events) {
    std::vector<Pos3D> out;
    out.reserve(events.size());
    DecoderState st;
    for (size_t i = 0; i < events.size(); ++i) {
        if (i == 0 && events[0].kind == EventToken::Kind::Bos) {
            out.push_back({0, 0, 0});
            continue;
        }
        out.push_back(st.advance(events[i], static_cast<int>(i)));
    }
    return out;
}

}  // namespace scorelm
