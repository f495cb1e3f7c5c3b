#include "scorelm/score.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <stdexcept>

namespace scorelm {

int QuantizedScore::measure_at(int pos) const {
    int start = 0;
    for (size_t m = 0; m < measures.size(); ++m) {
        if (pos < start + measures[m]) return static_cast<int>(m);
        start += measures[m];
    }
    return -1;
}

int QuantizedScore::measure_start(int m) const {
    int start = 0;
    for (int i = 0; i < m; ++i) start += measures[i];
    return start;
}

void canonicalize(QuantizedScore& score) {
    for (auto& tr : score.tracks) {
        std::stable_sort(tr.notes.begin(), tr.notes.end(), note_less);
        auto eq = [](const NoteEvent& a, const NoteEvent& b) {
            return a.pitch == b.pitch && a.onset == b.onset && a.duration == b.duration;
        };
        tr.notes.erase(std::unique(tr.notes.begin(), tr.notes.end(), eq), tr.notes.end());
    }
}

bool is_canonical(const QuantizedScore& score) {
    QuantizedScore copy = score;
    canonicalize(copy);
    return copy == score;
}

uint64_t content_hash(const QuantizedScore& score) {
    std::vector<std::array<int, 3>> all;
    for (const auto& tr : score.tracks)
        for (const auto& n : tr.notes) all.push_back({n.onset, n.pitch, n.duration});
    std::sort(all.begin(), all.end());
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& t : all) {
        mix(static_cast<uint64_t>(t[0]));
        mix(static_cast<uint64_t>(t[1]));
        mix(static_cast<uint64_t>(t[2]));
    }
    return h;
}

std::string score_to_text(const QuantizedScore& score) {
    std::ostringstream os;
    os << "measures";
    for (int m : score.measures) os << ' ' << m;
    os << '\n';
    for (const auto& tr : score.tracks) {
        os << "track " << tr.instrument << '\n';
        for (const auto& n : tr.notes)
            os << "note " << n.pitch << ' ' << n.onset << ' ' << n.duration << ' '
               << n.velocity << '\n';
    }
    return os.str();
}

QuantizedScore score_from_text(const std::string& text) {
    QuantizedScore score;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "measures") {
            int m;
            while (ls >> m) score.measures.push_back(m);
        } else if (tag == "track") {
            Track tr;
            ls >> tr.instrument;
            score.tracks.push_back(std::move(tr));
        } else if (tag == "note") {
            if (score.tracks.empty()) throw std::runtime_error("score text: note before track");
            NoteEvent n;
            ls >> n.pitch >> n.onset >> n.duration >> n.velocity;
            score.tracks.back().notes.push_back(n);
        } else {
            throw std::runtime_error("score text: unknown line tag '" + tag + "'");
        }
    }
    return score;
}

}  // namespace scorelm
