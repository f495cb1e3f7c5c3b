#include <benchmark/benchmark.h>

#include <random>

#include "scorelm/bpe.hpp"
#include "scorelm/codec.hpp"
#include "scorelm/model.hpp"

namespace {

using namespace scorelm;

std::vector<Mulpi> random_bag(size_t count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Mulpi> bag;
    for (size_t i = 0; i < count; ++i) {
        int size = 2 + static_cast<int>(rng() % 5);
        std::vector<uint8_t> pitches;
        while (static_cast<int>(pitches.size()) < size) {
            uint8_t p = static_cast<uint8_t>(rng() % 128);
            if (std::find(pitches.begin(), pitches.end(), p) == pitches.end())
                pitches.push_back(p);
        }
        std::sort(pitches.begin(), pitches.end());
        bag.push_back({pitches, 0, 0, 8});
    }
    return bag;
}

void BM_BpeTrain(benchmark::State& state) {
    auto bag = random_bag(static_cast<size_t>(state.range(0)), 7);
    for (auto _ : state) {
        auto vocab = train(bag, 128 + 64);
        benchmark::DoNotOptimize(vocab.size());
    }
}
BENCHMARK(BM_BpeTrain)->Arg(1000)->Arg(10000);

void BM_LinearAttention(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist;
    Mat q(T, 16), k(T, 16), v(T, 16);
    for (Mat* m : {&q, &k, &v})
        for (long i = 0; i < m->size(); ++i) m->data()[i] = dist(rng);
    for (auto _ : state) {
        Mat out = causal_linear_attention(q, k, v);
        benchmark::DoNotOptimize(out.sum());
    }
}
BENCHMARK(BM_LinearAttention)->Arg(256)->Arg(1024)->Arg(4096);

void BM_Gradients(benchmark::State& state) {
    ModelConfig config;
    config.embed_dim = 64;
    config.layers = 2;
    config.heads = 4;
    config.seed = 3;
    ModelParams params = ModelParams::init(config);
    QuantizedScore score;
    score.measures.assign(8, 32);
    Track tr{0, {}};
    for (int m = 0; m < 8; ++m)
        for (int j = 0; j < 8; ++j)
            tr.notes.push_back({60 + j, m * 32 + j * 4, 4, 80});
    score.tracks.push_back(tr);
    Batch batch = make_batch(encode(score, detect_score_chords(score), MergeVocab()), config);
    for (auto _ : state) {
        auto g = gradients(params, batch, config);
        benchmark::DoNotOptimize(g.loss.total);
    }
}
BENCHMARK(BM_Gradients);

}  // namespace

BENCHMARK_MAIN();
