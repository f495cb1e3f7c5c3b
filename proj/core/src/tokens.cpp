#include "scorelm/tokens.hpp"

#include <sstream>
#include <stdexcept>

namespace scorelm {

int EventToken::id() const {
    switch (kind) {
        case Kind::Bos: return 0;
        case Kind::Eos: return 1;
        case Kind::Eom: return 2;
        case Kind::Cc: return 3;
        case Kind::Bom: return 3 + value;            // value in [1,128]
        case Kind::Chord: return 132 + value;        // value in [0,133)
        case Kind::Pos: return 265 + value;          // value in [0,128)
        case Kind::PitchSet: return kStructuralVocab + value;
    }
    throw std::logic_error("bad event kind");
}

EventToken EventToken::from_id(int id) {
    if (id == 0) return bos();
    if (id == 1) return eos();
    if (id == 2) return eom();
    if (id == 3) return cc();
    if (id <= 131) return bom(id - 3);
    if (id <= 264) return chord_token(id - 132);
    if (id <= 392) return pos(id - 265);
    return pitchset(id - kStructuralVocab);
}

std::string EventToken::to_text() const {
    switch (kind) {
        case Kind::Bos: return "BOS";
        case Kind::Eos: return "EOS";
        case Kind::Eom: return "EOM";
        case Kind::Cc: return "CC";
        case Kind::Bom: return "BOM_" + std::to_string(value);
        case Kind::Chord: return ChordLabel::from_index(value).to_text();
        case Kind::Pos: return "POS_" + std::to_string(value);
        case Kind::PitchSet: return "PS_" + std::to_string(value);
    }
    throw std::logic_error("bad event kind");
}

EventToken EventToken::from_text(const std::string& text) {
    if (text == "BOS") return bos();
    if (text == "EOS") return eos();
    if (text == "EOM") return eom();
    if (text == "CC") return cc();
    if (text.starts_with("BOM_")) {
        int v = std::stoi(text.substr(4));
        if (v < 1 || v > 128) throw std::invalid_argument("bad BOM token: " + text);
        return bom(v);
    }
    if (text.starts_with("POS_")) {
        int v = std::stoi(text.substr(4));
        if (v < 0 || v > 127) throw std::invalid_argument("bad POS token: " + text);
        return pos(v);
    }
    if (text.starts_with("PS_")) return pitchset(std::stoi(text.substr(3)));
    if (text.starts_with("[")) return chord_token(ChordLabel::from_text(text).index());
    throw std::invalid_argument("bad event token: " + text);
}

std::string tokens_to_text(const TokenSeq& seq) {
    std::ostringstream os;
    for (const auto& t : seq) {
        os << t.event.to_text() << '\t';
        if (t.duration == kDurNull)
            os << '-';
        else
            os << t.duration;
        os << '\t' << t.track_ord << '\t';
        if (t.instrument == kInstNull)
            os << '-';
        else if (t.instrument == kInstMask)
            os << "MASK";
        else
            os << t.instrument;
        os << '\t' << t.pos.measure << '\t' << t.pos.onset << '\t' << t.pos.track << '\n';
    }
    return os.str();
}

TokenSeq tokens_from_text(const std::string& text) {
    TokenSeq seq;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string evt, dur, trk, inst, m, o, r;
        if (!(std::getline(ls, evt, '\t') && std::getline(ls, dur, '\t') &&
              std::getline(ls, trk, '\t') && std::getline(ls, inst, '\t') &&
              std::getline(ls, m, '\t') && std::getline(ls, o, '\t') && std::getline(ls, r)))
            throw std::runtime_error("token line " + std::to_string(lineno) +
                                     ": expected 7 tab-separated fields");
        TokenTuple t;
        t.event = EventToken::from_text(evt);
        t.duration = dur == "-" ? kDurNull : std::stoi(dur);
        t.track_ord = std::stoi(trk);
        t.instrument = inst == "-" ? kInstNull : inst == "MASK" ? kInstMask : std::stoi(inst);
        t.pos = {std::stoi(m), std::stoi(o), std::stoi(r)};
        seq.push_back(t);
    }
    return seq;
}

}  // namespace scorelm
