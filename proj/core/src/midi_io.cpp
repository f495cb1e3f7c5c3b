#include "scorelm/midi_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <tuple>

namespace scorelm {

namespace {

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    uint8_t u8() {
        if (pos >= b.size()) throw MidiError("unexpected end of file", pos);
        return b[pos++];
    }
    uint16_t u16() {
        uint16_t hi = u8(), lo = u8();
        return static_cast<uint16_t>(hi << 8 | lo);
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | u8();
        return v;
    }
    uint32_t vlq() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            uint8_t c = u8();
            v = v << 7 | (c & 0x7f);
            if (!(c & 0x80)) return v;
        }
        throw MidiError("variable-length quantity too long", pos);
    }
    void expect_tag(const char* tag) {
        size_t at = pos;
        for (int i = 0; i < 4; ++i)
            if (u8() != static_cast<uint8_t>(tag[i]))
                throw MidiError(std::string("expected chunk tag '") + tag + "'", at);
    }
    void skip(size_t n) {
        if (pos + n > b.size()) throw MidiError("chunk overruns file", pos);
        pos += n;
    }
};

struct SigEvent {
    int64_t tick;
    int unit_len;  // measure length in grid units
};

struct PendingOn {
    int64_t tick;
    int velocity;
    int program;  // active program at note-on
};

// Grouping key inside one track chunk. Percussion folds program to 128
// so kit changes do not split the track.
struct GroupKey {
    int channel;
    int program;
    bool operator<(const GroupKey& o) const {
        return std::tie(channel, program) < std::tie(o.channel, o.program);
    }
};

}  // namespace

int quantize_time(int64_t ticks, int ppq) {
    // round(ticks * 8 / ppq), half-up
    int64_t num = ticks * kGridPerQuarter * 2 + ppq;
    return static_cast<int>(num / (2 * ppq));
}

ParseResult parse_midi(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    r.expect_tag("MThd");
    uint32_t hlen = r.u32();
    if (hlen < 6) throw MidiError("malformed header length", r.pos);
    uint16_t format = r.u16();
    uint16_t ntrks = r.u16();
    uint16_t division = r.u16();
    if (format == 2) throw MidiError("SMF type 2 is not supported", 8);
    if (format > 2) throw MidiError("unknown SMF format", 8);
    if (division & 0x8000) throw MidiError("SMPTE time division is not supported", 12);
    int ppq = division;
    if (ppq == 0) throw MidiError("zero ticks per quarter note", 12);
    r.skip(hlen - 6);

    ParseResult result;
    bool tempo_seen = false;
    std::vector<SigEvent> sigs;
    int64_t max_end_tick = 0;

    // Quantized notes in first-seen group order across all chunks.
    std::vector<std::pair<int, std::vector<NoteEvent>>> groups;  // instrument, notes

    for (int trk = 0; trk < ntrks; ++trk) {
        r.expect_tag("MTrk");
        uint32_t tlen = r.u32();
        size_t track_end = r.pos + tlen;
        if (track_end > bytes.size()) throw MidiError("track chunk overruns file", r.pos - 4);

        int64_t tick = 0;
        uint8_t running = 0;
        int program[16] = {0};
        std::map<GroupKey, size_t> group_of;           // key -> index into `groups`
        std::map<std::pair<int, int>, std::deque<PendingOn>> pending;  // (ch,pitch)

        auto group_index = [&](int channel, int prog) -> size_t {
            GroupKey key{channel, channel == 9 ? kPercussion : prog};
            auto it = group_of.find(key);
            if (it != group_of.end()) return it->second;
            groups.push_back({key.program, {}});
            group_of.emplace(key, groups.size() - 1);
            return groups.size() - 1;
        };
        auto close_note = [&](int channel, int pitch, int64_t off_tick) {
            auto it = pending.find({channel, pitch});
            if (it == pending.end() || it->second.empty()) return;  // stray note-off
            PendingOn on = it->second.front();
            it->second.pop_front();
            int onset = quantize_time(on.tick, ppq);
            int dur = std::max(1, quantize_time(off_tick, ppq) - onset);
            groups[group_index(channel, on.program)].second.push_back(
                {pitch, onset, dur, std::clamp(on.velocity, 1, 127)});
            max_end_tick = std::max(max_end_tick, off_tick);
        };

        while (r.pos < track_end) {
            tick += r.vlq();
            uint8_t status = r.u8();
            if (status < 0x80) {
                if (running == 0) throw MidiError("data byte without running status", r.pos - 1);
                --r.pos;
                status = running;
            }
            if (status < 0xf0) running = status;
            int channel = status & 0x0f;
            switch (status & 0xf0) {
                case 0x90: {
                    int pitch = r.u8() & 0x7f;
                    int vel = r.u8() & 0x7f;
                    if (vel > 0)
                        pending[{channel, pitch}].push_back({tick, vel, program[channel]});
                    else
                        close_note(channel, pitch, tick);
                    break;
                }
                case 0x80: {
                    int pitch = r.u8() & 0x7f;
                    r.u8();  // release velocity
                    close_note(channel, pitch, tick);
                    break;
                }
                case 0xc0:
                    program[channel] = r.u8() & 0x7f;
                    break;
                case 0xd0:
                    r.u8();
                    break;
                case 0xa0:
                case 0xb0:
                case 0xe0:
                    r.u8();
                    r.u8();
                    break;
                case 0xf0:
                    if (status == 0xf0 || status == 0xf7) {
                        r.skip(r.vlq());
                    } else if (status == 0xff) {
                        uint8_t type = r.u8();
                        uint32_t len = r.vlq();
                        size_t at = r.pos;
                        if (type == 0x51 && len == 3) {
                            uint32_t uspq = r.u8();
                            uspq = uspq << 8 | r.u8();
                            uspq = uspq << 8 | r.u8();
                            if (!tempo_seen && uspq > 0) {
                                result.tempo_bpm = 60000000.0 / uspq;
                                tempo_seen = true;
                            }
                        } else if (type == 0x58 && len >= 2) {
                            int nn = r.u8();
                            int dd = r.u8();
                            r.skip(len - 2);
                            if (dd > 5) throw MidiError("time signature finer than 1/32", at);
                            int unit_len = nn * (32 >> dd);
                            if (unit_len < 1 || unit_len > kMaxMeasureLen)
                                throw MidiError("measure length out of range [1,128]", at);
                            sigs.push_back({tick, unit_len});
                        } else {
                            r.skip(len);
                        }
                        if (type == 0x2f) {
                            max_end_tick = std::max(max_end_tick, tick);
                            r.pos = track_end;
                        }
                    } else {
                        throw MidiError("unsupported system message", r.pos - 1);
                    }
                    break;
                default:
                    throw MidiError("invalid status byte", r.pos - 1);
            }
        }
        // Unmatched note-ons close at end of track.
        for (auto& [key, queue] : pending) {
            while (!queue.empty()) {
                result.had_unmatched_note_on = true;
                close_note(key.first, key.second, std::max(tick, queue.front().tick + 1));
            }
        }
        r.pos = track_end;
    }

    for (auto& [instrument, notes] : groups) {
        if (notes.empty()) continue;
        Track tr;
        tr.instrument = instrument;
        tr.notes = std::move(notes);
        result.score.tracks.push_back(std::move(tr));
    }
    if (result.score.tracks.size() > kMaxTracks)
        throw MidiError("more than " + std::to_string(kMaxTracks) + " tracks", 0);

    // Measure list: active time signature (default 4/4), covering every
    // note and the conductor end-of-track.
    std::stable_sort(sigs.begin(), sigs.end(),
                     [](const SigEvent& a, const SigEvent& b) { return a.tick < b.tick; });
    int needed = 0;
    for (const auto& tr : result.score.tracks)
        for (const auto& n : tr.notes) needed = std::max(needed, n.onset + n.duration);
    needed = std::max(needed, quantize_time(max_end_tick, ppq));
    int pos = 0, active = 32;
    size_t next_sig = 0;
    while (pos < needed) {
        int64_t pos_ticks = static_cast<int64_t>(pos) * ppq / kGridPerQuarter;
        while (next_sig < sigs.size() && sigs[next_sig].tick <= pos_ticks)
            active = sigs[next_sig++].unit_len;
        result.score.measures.push_back(active);
        pos += active;
    }
    canonicalize(result.score);
    return result;
}

namespace {

struct Writer {
    std::vector<uint8_t> out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) {
        u8(v >> 8);
        u8(v & 0xff);
    }
    void u32(uint32_t v) {
        for (int i = 3; i >= 0; --i) u8((v >> (8 * i)) & 0xff);
    }
    void tag(const char* t) {
        for (int i = 0; i < 4; ++i) u8(t[i]);
    }
    void vlq(int64_t v) {
        uint8_t buf[5];
        int n = 0;
        do {
            buf[n++] = v & 0x7f;
            v >>= 7;
        } while (v > 0);
        while (n > 1) u8(buf[--n] | 0x80);
        u8(buf[0]);
    }
};

struct TimedEvent {
    int64_t tick;
    int order;  // note-offs sort before note-ons at the same tick
    std::vector<uint8_t> bytes;
};

void emit_track(Writer& w, std::vector<TimedEvent> events, int64_t end_tick) {
    std::stable_sort(events.begin(), events.end(), [](const TimedEvent& a, const TimedEvent& b) {
        return std::tie(a.tick, a.order) < std::tie(b.tick, b.order);
    });
    Writer body;
    int64_t tick = 0;
    for (const auto& e : events) {
        body.vlq(e.tick - tick);
        tick = e.tick;
        body.out.insert(body.out.end(), e.bytes.begin(), e.bytes.end());
    }
    body.vlq(std::max<int64_t>(0, end_tick - tick));
    body.u8(0xff);
    body.u8(0x2f);
    body.u8(0x00);
    w.tag("MTrk");
    w.u32(static_cast<uint32_t>(body.out.size()));
    w.out.insert(w.out.end(), body.out.begin(), body.out.end());
}

std::pair<int, int> time_signature_for(int unit_len) {
    if (unit_len % 8 == 0) return {unit_len / 8, 2};
    if (unit_len % 4 == 0) return {unit_len / 4, 3};
    if (unit_len % 2 == 0) return {unit_len / 2, 4};
    return {unit_len, 5};
}

}  // namespace

WriteResult write_midi(const QuantizedScore& score, double tempo_bpm) {
    constexpr int ppq = 480;
    constexpr int tick_per_unit = ppq / kGridPerQuarter;  // 60

    WriteResult result;
    Writer w;
    w.tag("MThd");
    w.u32(6);
    w.u16(1);
    w.u16(static_cast<uint16_t>(1 + score.tracks.size()));
    w.u16(ppq);

    // Conductor track: tempo + time signatures.
    {
        std::vector<TimedEvent> events;
        uint32_t uspq = static_cast<uint32_t>(std::lround(60000000.0 / tempo_bpm));
        events.push_back({0, 0, {0xff, 0x51, 0x03, static_cast<uint8_t>(uspq >> 16 & 0xff),
                                 static_cast<uint8_t>(uspq >> 8 & 0xff),
                                 static_cast<uint8_t>(uspq & 0xff)}});
        int64_t pos = 0;
        int prev_len = -1;
        for (int len : score.measures) {
            if (len != prev_len) {
                auto [nn, dd] = time_signature_for(len);
                events.push_back({pos * tick_per_unit,
                                  1,
                                  {0xff, 0x58, 0x04, static_cast<uint8_t>(nn),
                                   static_cast<uint8_t>(dd), 24, 8}});
                prev_len = len;
            }
            pos += len;
        }
        emit_track(w, std::move(events), pos * tick_per_unit);
    }

    int next_channel = 0;
    int assigned = 0;
    for (const auto& tr : score.tracks) {
        int channel;
        if (tr.instrument == kPercussion) {
            channel = 9;
        } else {
            channel = next_channel;
            next_channel = (next_channel + 1) % 16;
            if (next_channel == 9) next_channel = 10;
            if (++assigned > 15) result.channels_reused = true;
        }
        std::vector<TimedEvent> events;
        uint8_t program = tr.instrument == kPercussion ? 0 : static_cast<uint8_t>(tr.instrument);
        events.push_back({0, 0, {static_cast<uint8_t>(0xc0 | channel), program}});
        int64_t end_tick = 0;
        for (const auto& n : tr.notes) {
            int64_t on = static_cast<int64_t>(n.onset) * tick_per_unit;
            int64_t off = static_cast<int64_t>(n.onset + n.duration) * tick_per_unit;
            uint8_t vel = static_cast<uint8_t>(std::clamp(n.velocity, 1, 127));
            events.push_back({on, 2, {static_cast<uint8_t>(0x90 | channel),
                                      static_cast<uint8_t>(n.pitch), vel}});
            events.push_back({off, 1, {static_cast<uint8_t>(0x80 | channel),
                                       static_cast<uint8_t>(n.pitch), 0x40}});
            end_tick = std::max(end_tick, off);
        }
        emit_track(w, std::move(events), end_tick);
    }
    result.bytes = std::move(w.out);
    return result;
}

void CorpusStats::merge(const CorpusStats& other) {
    file_count += other.file_count;
    parse_error_count += other.parse_error_count;
    note_count += other.note_count;
    for (auto [k, v] : other.token_length_hist) token_length_hist[k] += v;
    for (auto [k, v] : other.measure_length_hist) measure_length_hist[k] += v;
    for (const auto& [h, paths] : other.duplicate_groups)
        duplicate_groups[h].insert(duplicate_groups[h].end(), paths.begin(), paths.end());
    error_files.insert(error_files.end(), other.error_files.begin(), other.error_files.end());
}

std::string CorpusStats::to_text() const {
    std::ostringstream os;
    os << "files " << file_count << '\n';
    os << "parse_errors " << parse_error_count << '\n';
    os << "notes " << note_count << '\n';
    for (auto [bucket, n] : token_length_hist)
        os << "token_length_le_" << bucket << ' ' << n << '\n';
    for (auto [len, n] : measure_length_hist) os << "measure_length_" << len << ' ' << n << '\n';
    int dup_groups = 0;
    for (const auto& [h, paths] : duplicate_groups)
        if (paths.size() >= 2) ++dup_groups;
    os << "duplicate_groups " << dup_groups << '\n';
    for (const auto& [h, paths] : duplicate_groups) {
        if (paths.size() < 2) continue;
        os << "duplicate_group";
        for (const auto& p : paths) os << ' ' << p;
        os << '\n';
    }
    for (const auto& p : error_files) os << "error_file " << p << '\n';
    return os.str();
}

CorpusStats corpus_stats(const std::vector<std::string>& paths) {
    CorpusStats stats;
    for (const auto& path : paths) {
        ++stats.file_count;
        QuantizedScore score;
        try {
            score = parse_midi(read_file(path)).score;
        } catch (const std::exception&) {
            ++stats.parse_error_count;
            stats.error_files.push_back(path);
            continue;
        }
        stats.note_count += score.note_count();
        for (int len : score.measures) ++stats.measure_length_hist[len];
        stats.duplicate_groups[content_hash(score)].push_back(path);

        // Event-token count of the singleton-vocabulary encoding:
        // BOS/EOS, per measure BOM+CHORD+EOM, per occupied (measure,track)
        // one CC, one POS per occupied onset, one token per note.
        long long tokens = 2;
        for (size_t m = 0; m < score.measures.size(); ++m) {
            tokens += 3;
            int start = score.measure_start(static_cast<int>(m));
            int end = start + score.measures[m];
            for (const auto& tr : score.tracks) {
                int onsets = 0, notes = 0, last_onset = -1;
                for (const auto& n : tr.notes) {
                    if (n.onset < start || n.onset >= end) continue;
                    ++notes;
                    if (n.onset != last_onset) {
                        ++onsets;
                        last_onset = n.onset;
                    }
                }
                if (notes > 0) tokens += 1 + onsets + notes;
            }
        }
        int bucket = 1;
        while (bucket < tokens) bucket *= 2;
        ++stats.token_length_hist[bucket];
    }
    // Only groups of size >= 2 are duplicates.
    for (auto it = stats.duplicate_groups.begin(); it != stats.duplicate_groups.end();)
        it = it->second.size() < 2 ? stats.duplicate_groups.erase(it) : std::next(it);
    return stats;
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace scorelm
