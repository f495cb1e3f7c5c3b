#include "scorelm/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scorelm {

void SampleConfig::validate() const {
    if (temperature <= 0) throw std::invalid_argument("temperature must be > 0");
    if (nucleus_p <= 0 || nucleus_p > 1) throw std::invalid_argument("nucleus p must be in (0,1]");
    if (max_tuples < 2) throw std::invalid_argument("max tuples must be >= 2");
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return (rng() >> 11) * 0x1.0p-53;
}

}  // namespace

int sample_masked(const Eigen::RowVectorXd& logits, const std::vector<char>& mask,
                  double temperature, double nucleus_p, std::mt19937_64& rng) {
    std::vector<int> admissible;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) admissible.push_back(static_cast<int>(i));
    assert(!admissible.empty() && "grammar mask admits no token");

    double mx = -std::numeric_limits<double>::infinity();
    for (int i : admissible) mx = std::max(mx, logits(i) / temperature);
    std::vector<double> probs(admissible.size());
    double sum = 0;
    for (size_t j = 0; j < admissible.size(); ++j) {
        probs[j] = std::exp(logits(admissible[j]) / temperature - mx);
        sum += probs[j];
    }
    for (double& p : probs) p /= sum;

    // Nucleus: smallest admissible prefix (by descending probability)
    // whose mass reaches p. Index order breaks probability ties.
    std::vector<size_t> order(admissible.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&probs](size_t a, size_t b) { return probs[a] > probs[b]; });
    double mass = 0;
    size_t keep = 0;
    while (keep < order.size()) {
        mass += probs[order[keep++]];
        if (mass >= nucleus_p) break;
    }
    double r = uniform01(rng) * mass;
    double acc = 0;
    for (size_t j = 0; j < keep; ++j) {
        acc += probs[order[j]];
        if (r < acc) return admissible[order[j]];
    }
    return admissible[order[keep - 1]];
}

Sampler::Sampler(const ModelParams& params, const ModelConfig& config,
                 const SampleConfig& sample)
    : params_(params),
      config_(config),
      sample_(sample),
      inference_(params, config),
      rng_(sample.seed) {
    config_.validate();
    sample_.validate();
    TokenTuple bos_tuple{bos(), kDurNull, 0, kInstNull, {0, 0, 0}};
    pending_ = feed(bos_tuple);
    has_pending_ = true;
}

Logits Sampler::feed(const TokenTuple& tuple) {
    return inference_.step(tuple.event.id(), tuple.duration, tuple.track_ord,
                           tuple.pos.measure, tuple.pos.onset, tuple.pos.track);
}

void Sampler::force(const TokenTuple& tuple) {
    state_.advance(tuple.event, inference_.position());
    if (tuple.event.kind == EventToken::Kind::Cc) current_instrument_ = tuple.instrument;
    pending_ = feed(tuple);
    has_pending_ = true;
}

TokenTuple Sampler::step(std::optional<EventToken> forced_event, bool allow_eos,
                         bool prefer_close) {
    assert(has_pending_ && !done());
    using K = EventToken::Kind;

    EventToken event;
    if (forced_event) {
        event = *forced_event;
    } else {
        std::vector<char> mask = state_.event_mask(config_.event_vocab());
        // Model-side caps: positional tables bound measures, occupied
        // onsets and tracks; the grammar itself is unbounded.
        if (state_.measure_ord() >= config_.max_measure)
            for (int i = 1; i <= kMaxMeasureLen; ++i) mask[bom(i).id()] = 0;
        if (state_.onset_ord() >= config_.max_onset - 1)
            for (int j = 0; j < kMaxMeasureLen; ++j) mask[pos(j).id()] = 0;
        if (state_.track_ord() >= std::min(kMaxTracks, config_.max_track_pos - 1))
            mask[cc().id()] = 0;
        int ps_limit = sample_.pitchset_limit < 0 ? config_.pitchset_vocab
                                                  : sample_.pitchset_limit;
        for (int k = ps_limit; k < config_.pitchset_vocab; ++k) mask[pitchset(k).id()] = 0;
        if (!allow_eos && state_.phase() == DecoderState::Phase::MeasureOrEnd)
            mask[eos().id()] = 0;
        if (prefer_close) {
            // Head for the nearest EOS: close the measure, then the score.
            if (state_.phase() == DecoderState::Phase::MeasureOrEnd) {
                std::fill(mask.begin(), mask.end(), 0);
                mask[eos().id()] = 1;
            } else if (state_.phase() == DecoderState::Phase::TrackOrEom ||
                       state_.phase() == DecoderState::Phase::NoteOrNext) {
                std::fill(mask.begin(), mask.end(), 0);
                mask[eom().id()] = 1;
            }
        }
        int id = sample_masked(pending_.event.row(0), mask, sample_.temperature,
                               sample_.nucleus_p, rng_);
        event = EventToken::from_id(id);
    }

    TokenTuple tuple;
    tuple.event = event;
    if (event.kind == K::PitchSet) {
        std::vector<char> dur_mask(config_.duration_vocab, 0);
        for (int d = 1; d <= kMaxDuration; ++d) dur_mask[d] = 1;
        tuple.duration = forced_event ? 1
                                      : sample_masked(pending_.dur.row(0), dur_mask,
                                                      sample_.temperature, sample_.nucleus_p,
                                                      rng_);
    }
    if (event.kind == K::Cc) {
        std::vector<char> inst_mask(config_.instrument_vocab, 0);
        for (int i = 0; i <= kPercussion; ++i) inst_mask[i] = 1;
        current_instrument_ = sample_masked(pending_.inst.row(0), inst_mask,
                                            sample_.temperature, sample_.nucleus_p, rng_);
        tuple.instrument = current_instrument_;
    } else if (event.kind == K::PitchSet) {
        tuple.instrument = current_instrument_;
    }

    tuple.pos = state_.advance(event, inference_.position());
    tuple.track_ord = (event.kind == K::Cc || event.kind == K::Pos || event.kind == K::PitchSet)
                          ? tuple.pos.track
                          : 0;
    pending_ = feed(tuple);
    return tuple;
}

TokenSeq generate(const ModelParams& params, const ModelConfig& config,
                  const SampleConfig& sample, const TokenSeq* prime,
                  const std::vector<ChordLabel>* chords) {
    if (sample.mode == SampleMode::ChordSequence && (!chords || chords->empty()))
        throw std::invalid_argument("chord mode needs a non-empty chord list");
    if (sample.mode == SampleMode::Prime && (!prime || prime->empty()))
        throw std::invalid_argument("prime mode needs a prime sequence");

    Sampler sampler(params, config, sample);
    TokenSeq out;
    out.push_back({bos(), kDurNull, 0, kInstNull, {0, 0, 0}});

    if (sample.mode == SampleMode::Prime) {
        for (size_t i = 0; i < prime->size(); ++i) {
            const auto& t = (*prime)[i];
            if (i == 0 && t.event.kind == EventToken::Kind::Bos) continue;
            if (t.event.kind == EventToken::Kind::Eos) break;  // continue past the prime
            sampler.force(t);
            out.push_back(t);
        }
    }

    const int n_chords =
        sample.mode == SampleMode::ChordSequence ? static_cast<int>(chords->size()) : 0;
    // Reserve room for the forced close: at worst POS + note + EOM + EOS.
    const int soft_limit = std::max(2, sample.max_tuples - 4);
    while (!sampler.done()) {
        bool closing = static_cast<int>(out.size()) >= soft_limit;
        std::optional<EventToken> forced;
        bool allow_eos = true;
        if (!closing && sampler.state().phase() == DecoderState::Phase::Chord &&
            sampler.state().measure_ord() <= n_chords)
            forced = chord_token((*chords)[sampler.state().measure_ord() - 1].index());
        if (sampler.state().measure_ord() < n_chords) allow_eos = false;
        out.push_back(sampler.step(forced, allow_eos, closing));
    }
    return out;
}

}  // namespace scorelm
