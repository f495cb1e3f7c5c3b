#include "scorelm/bpe.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace scorelm {

MergeVocab::MergeVocab() {
    sets_.reserve(kBaseVocab);
    for (int p = 0; p < kBaseVocab; ++p) sets_.push_back({static_cast<uint8_t>(p)});
}

const std::vector<uint8_t>& MergeVocab::expand(int token) const {
    if (token < 0 || token >= size()) throw std::out_of_range("unknown vocab token");
    return sets_[token];
}

int MergeVocab::add_merge(int left, int right) {
    const auto& ls = expand(left);
    const auto& rs = expand(right);
    std::vector<uint8_t> merged;
    std::merge(ls.begin(), ls.end(), rs.begin(), rs.end(), std::back_inserter(merged));
    for (size_t i = 1; i < merged.size(); ++i)
        if (merged[i] == merged[i - 1])
            throw std::invalid_argument("merge parts are not disjoint");
    merges_.push_back({left, right});
    sets_.push_back(std::move(merged));
    return size() - 1;
}

std::vector<int> MergeVocab::apply(const std::vector<uint8_t>& pitches) const {
    std::vector<int> part;
    for (uint8_t p : pitches) {
        if (p >= kBaseVocab) throw std::invalid_argument("pitch out of range");
        part.push_back(p);
    }
    // Replay merges in rank order. Parts of a merge can only be created
    // by earlier merges, so a single ordered pass suffices.
    for (size_t rank = 0; rank < merges_.size(); ++rank) {
        const MergeRule& rule = merges_[rank];
        auto li = std::find(part.begin(), part.end(), rule.left);
        if (li == part.end()) continue;
        auto ri = std::find(part.begin(), part.end(), rule.right);
        if (ri == part.end()) continue;
        *li = kBaseVocab + static_cast<int>(rank);
        part.erase(ri);
    }
    std::sort(part.begin(), part.end(),
              [this](int a, int b) { return sets_[a][0] < sets_[b][0]; });
    return part;
}

std::string MergeVocab::to_text() const {
    std::ostringstream os;
    auto put_set = [&os](const std::vector<uint8_t>& s) {
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << int(s[i]);
    };
    for (const auto& m : merges_) {
        put_set(sets_[m.left]);
        os << '|';
        put_set(sets_[m.right]);
        os << '\n';
    }
    return os.str();
}

MergeVocab MergeVocab::from_text(const std::string& text) {
    MergeVocab vocab;
    std::map<std::vector<uint8_t>, int> id_of;
    for (int p = 0; p < kBaseVocab; ++p) id_of[{static_cast<uint8_t>(p)}] = p;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto parse_set = [&](const std::string& s) {
        std::vector<uint8_t> out;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ','))
            out.push_back(static_cast<uint8_t>(std::stoi(tok)));
        return out;
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto sep = line.find('|');
        if (sep == std::string::npos)
            throw std::runtime_error("vocab line " + std::to_string(lineno) + ": missing '|'");
        auto ls = parse_set(line.substr(0, sep));
        auto rs = parse_set(line.substr(sep + 1));
        auto li = id_of.find(ls), ri = id_of.find(rs);
        if (li == id_of.end() || ri == id_of.end())
            throw std::runtime_error("vocab line " + std::to_string(lineno) +
                                     ": part not produced by an earlier rank");
        int id = vocab.add_merge(li->second, ri->second);
        id_of.emplace(vocab.expand(id), id);
    }
    return vocab;
}

std::vector<Mulpi> extract_mulpies(const QuantizedScore& score) {
    std::vector<Mulpi> bag;
    for (size_t t = 0; t < score.tracks.size(); ++t) {
        const auto& notes = score.tracks[t].notes;
        std::map<std::pair<int, int>, std::vector<uint8_t>> groups;  // (onset,dur)
        for (const auto& n : notes)
            groups[{n.onset, n.duration}].push_back(static_cast<uint8_t>(n.pitch));
        for (auto& [key, pitches] : groups) {
            if (pitches.size() < 2) continue;
            std::sort(pitches.begin(), pitches.end());
            bag.push_back({std::move(pitches), static_cast<int>(t), key.first, key.second});
        }
    }
    return bag;
}

namespace {

// Training state shared by the incremental and reference trainers.
struct TrainState {
    MergeVocab vocab;
    std::vector<std::vector<int>> parts;  // per-mulpi token partition

    explicit TrainState(const std::vector<Mulpi>& bag) {
        for (const auto& m : bag) {
            std::vector<int> p(m.pitches.begin(), m.pitches.end());
            parts.push_back(std::move(p));
        }
    }

    bool set_less(int a, int b) const { return vocab.expand(a) < vocab.expand(b); }

    // Unordered pair normalized so the left set is lexicographically <=.
    std::pair<int, int> norm(int a, int b) const {
        return set_less(b, a) ? std::make_pair(b, a) : std::make_pair(a, b);
    }

    // True if pair (a,b) beats (c,d) in the selection order given equal
    // counts: lexicographically smaller left set, then right set.
    bool pair_less(std::pair<int, int> x, std::pair<int, int> y) const {
        const auto& xl = vocab.expand(x.first);
        const auto& yl = vocab.expand(y.first);
        if (xl != yl) return xl < yl;
        return vocab.expand(x.second) < vocab.expand(y.second);
    }
};

}  // namespace

MergeVocab train(const std::vector<Mulpi>& bag, int n, int min_freq) {
    if (n < kBaseVocab) throw std::invalid_argument("target vocab size below 128");
    if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");

    TrainState st(bag);
    std::map<std::pair<int, int>, std::unordered_set<int>> index;  // pair -> mulpi ids
    for (size_t m = 0; m < st.parts.size(); ++m) {
        const auto& part = st.parts[m];
        for (size_t i = 0; i < part.size(); ++i)
            for (size_t j = i + 1; j < part.size(); ++j)
                index[st.norm(part[i], part[j])].insert(static_cast<int>(m));
    }

    struct HeapEntry {
        int count;
        std::pair<int, int> pair;
    };
    auto heap_less = [&st](const HeapEntry& a, const HeapEntry& b) {
        if (a.count != b.count) return a.count < b.count;  // max-heap on count
        if (a.pair != b.pair) return st.pair_less(b.pair, a.pair);
        return false;
    };
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, decltype(heap_less)> heap(heap_less);
    for (const auto& [pair, mulpies] : index)
        heap.push({static_cast<int>(mulpies.size()), pair});

    while (st.vocab.size() < n && !index.empty()) {
        // Pop lazily invalidated entries.
        std::pair<int, int> best;
        int best_count = -1;
        while (!heap.empty()) {
            HeapEntry top = heap.top();
            auto it = index.find(top.pair);
            if (it == index.end() || static_cast<int>(it->second.size()) != top.count) {
                heap.pop();
                continue;
            }
            best = top.pair;
            best_count = top.count;
            break;
        }
        if (best_count < min_freq) break;

        auto [a, b] = best;
        int merged = st.vocab.add_merge(a, b);
        std::vector<int> members(index[best].begin(), index[best].end());
        index.erase(best);
        for (int m : members) {
            auto& part = st.parts[m];
            for (int q : part) {
                if (q == a || q == b) continue;
                for (int other : {a, b}) {
                    auto key = st.norm(q, other);
                    auto it = index.find(key);
                    if (it != index.end()) {
                        it->second.erase(m);
                        if (it->second.empty())
                            index.erase(it);
                        else
                            heap.push({static_cast<int>(it->second.size()), key});
                    }
                }
                auto key = st.norm(q, merged);
                auto& bucket = index[key];
                bucket.insert(m);
                heap.push({static_cast<int>(bucket.size()), key});
            }
            part.erase(std::remove(part.begin(), part.end(), a), part.end());
            part.erase(std::remove(part.begin(), part.end(), b), part.end());
            part.push_back(merged);
        }
    }
    return st.vocab;
}

MergeVocab train_reference(const std::vector<Mulpi>& bag, int n, int min_freq) {
    if (n < kBaseVocab) throw std::invalid_argument("target vocab size below 128");
    if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");

    TrainState st(bag);
    while (st.vocab.size() < n) {
        std::map<std::pair<int, int>, int> counts;
        for (const auto& part : st.parts)
            for (size_t i = 0; i < part.size(); ++i)
                for (size_t j = i + 1; j < part.size(); ++j)
                    ++counts[st.norm(part[i], part[j])];
        std::pair<int, int> best;
        int best_count = -1;
        for (const auto& [pair, count] : counts) {
            if (count > best_count || (count == best_count && st.pair_less(pair, best))) {
                best = pair;
                best_count = count;
            }
        }
        if (best_count < min_freq) break;
        auto [a, b] = best;
        int merged = st.vocab.add_merge(a, b);
        for (auto& part : st.parts) {
            bool has_a = std::find(part.begin(), part.end(), a) != part.end();
            bool has_b = std::find(part.begin(), part.end(), b) != part.end();
            if (!has_a || !has_b) continue;
            part.erase(std::remove(part.begin(), part.end(), a), part.end());
            part.erase(std::remove(part.begin(), part.end(), b), part.end());
            part.push_back(merged);
        }
    }
    return st.vocab;
}

}  // namespace scorelm
