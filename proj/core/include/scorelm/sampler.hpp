#ifndef SCORELM_SAMPLER_HPP
#define SCORELM_SAMPLER_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "scorelm/codec.hpp"
#include "scorelm/model.hpp"

namespace scorelm {

enum class SampleMode { Unconditional, Prime, ChordSequence };

struct SampleConfig {
    double temperature = 1.0;
    double nucleus_p = 0.9;
    int max_tuples = 1024;
    uint64_t seed = 0;
    SampleMode mode = SampleMode::Unconditional;
    // Number of pitch-set tokens actually backed by a merge vocab;
    // -1 means the model's full pitch-set budget.
    int pitchset_limit = -1;

    void validate() const;
};

// Temperature + nucleus sampling over a masked logit row. Masked-out
// entries never win; the nucleus is the smallest admissible set whose
// mass reaches p. Returns the sampled index.
int sample_masked(const Eigen::RowVectorXd& logits, const std::vector<char>& mask,
                  double temperature, double nucleus_p, std::mt19937_64& rng);

// One constrained decoding step: samples the event under the grammar
// mask (or uses `forced_event`), samples duration on pitch-set steps
// and instrument on CC steps, advances the grammar state, and feeds
// the model cache. Returns the emitted tuple.
class Sampler {
public:
    Sampler(const ModelParams& params, const ModelConfig& config, const SampleConfig& sample);

    TokenTuple step(std::optional<EventToken> forced_event = std::nullopt,
                    bool allow_eos = true, bool prefer_close = false);
    // Teacher-forces one tuple (its channels, instrument re-masked on
    // input) without sampling.
    void force(const TokenTuple& tuple);

    const DecoderState& state() const { return state_; }
    bool done() const { return state_.phase() == DecoderState::Phase::Done; }

private:
    Logits feed(const TokenTuple& tuple);

    const ModelParams& params_;
    ModelConfig config_;
    SampleConfig sample_;
    InferenceState inference_;
    DecoderState state_;
    std::mt19937_64 rng_;
    Logits pending_;        // logits conditioned on everything emitted so far
    bool has_pending_ = false;
    int current_instrument_ = kInstNull;  // instrument of the open track
};

// Generation under the three conditioning modes. Unconditional starts
// from BOS; prime mode replays the prime verbatim before sampling;
// chord mode forces the m-th chord token at measure m and keeps the
// sequence alive until the list is exhausted. The output always starts
// with BOS and ends with EOS.
TokenSeq generate(const ModelParams& params, const ModelConfig& config,
                  const SampleConfig& sample, const TokenSeq* prime = nullptr,
                  const std::vector<ChordLabel>* chords = nullptr);

}  // namespace scorelm

#endif
