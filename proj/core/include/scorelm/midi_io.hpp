#ifndef SCORELM_MIDI_IO_HPP
#define SCORELM_MIDI_IO_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "scorelm/score.hpp"

namespace scorelm {

class MidiError : public std::runtime_error {
public:
    MidiError(const std::string& msg, size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

struct ParseResult {
    QuantizedScore score;
    bool had_unmatched_note_on = false;  // note closed at end of track
    double tempo_bpm = 120.0;            // first tempo event, metadata only
};

// ticks -> grid units, half-up rounding. Durations are additionally
// floored at 1 by the caller.
int quantize_time(int64_t ticks, int ppq);

// Parse an SMF type 0/1 file into a canonical quantized score.
// Channel 10 maps to instrument 128; tracks are grouped by
// (file track, channel, program); identical notes are deduplicated.
ParseResult parse_midi(const std::vector<uint8_t>& bytes);

struct WriteResult {
    std::vector<uint8_t> bytes;
    bool channels_reused = false;  // more than 15 non-percussion tracks
};

// Emit the score as SMF type 1 at ppq 480 (grid unit = 60 ticks).
// Track 0 carries tempo and time signatures; each score track gets its
// own chunk with a program change, percussion on channel 9.
WriteResult write_midi(const QuantizedScore& score, double tempo_bpm = 120.0);

struct CorpusStats {
    int file_count = 0;
    int parse_error_count = 0;
    long long note_count = 0;
    std::map<int, int> token_length_hist;    // bucketed by powers of two
    std::map<int, int> measure_length_hist;  // grid units per measure
    std::map<uint64_t, std::vector<std::string>> duplicate_groups;  // hash -> paths, size >= 2
    std::vector<std::string> error_files;

    void merge(const CorpusStats& other);
    std::string to_text() const;
};

// Scan MIDI files; per-file parse errors are collected, never fatal.
CorpusStats corpus_stats(const std::vector<std::string>& paths);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace scorelm

#endif
