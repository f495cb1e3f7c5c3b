#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scorelm/bpe.hpp"
#include "scorelm/chord.hpp"
#include "scorelm/codec.hpp"
#include "scorelm/midi_io.hpp"
#include "scorelm/model.hpp"
#include "scorelm/sampler.hpp"
#include "scorelm/score.hpp"
#include "scorelm/tokens.hpp"
#include "scorelm/trainer.hpp"

namespace fs = std::filesystem;
using namespace scorelm;

namespace {

std::vector<std::string> list_files(const std::string& dir,
                                    const std::vector<std::string>& exts) {
    if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(c));
        if (std::find(exts.begin(), exts.end(), ext) != exts.end())
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << text;
}

struct ModelFlags {
    ModelConfig config;
    void add_to(CLI::App* cmd) {
        cmd->add_option("--embed-dim", config.embed_dim, "embedding size");
        cmd->add_option("--layers", config.layers, "decoder layers");
        cmd->add_option("--heads", config.heads, "attention heads");
        cmd->add_option("--max-seq", config.max_seq, "max input sequence length");
        cmd->add_option("--pitchset-vocab", config.pitchset_vocab,
                        "pitch-set share of the event vocabulary");
    }
};

int cmd_ingest(const std::string& in_dir, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto paths = list_files(in_dir, {".mid", ".midi"});
    std::ostringstream errors;
    int ok = 0, failed = 0;
    for (const auto& path : paths) {
        try {
            ParseResult parsed = parse_midi(read_file(path));
            std::string base = fs::path(path).stem().string();
            write_text((fs::path(out_dir) / (base + ".qs")).string(),
                       score_to_text(parsed.score));
            if (parsed.had_unmatched_note_on)
                errors << path << "\twarning: unmatched note-on closed at track end\n";
            ++ok;
        } catch (const std::exception& e) {
            errors << path << "\terror: " << e.what() << '\n';
            ++failed;
        }
    }
    write_text((fs::path(out_dir) / "ingest_report.txt").string(), errors.str());
    std::cout << "ingested " << ok << " files, " << failed << " failed\n";
    return 0;
}

int cmd_stats(const std::string& in_dir, const std::string& out_path) {
    CorpusStats stats = corpus_stats(list_files(in_dir, {".mid", ".midi"}));
    if (out_path.empty())
        std::cout << stats.to_text();
    else
        write_text(out_path, stats.to_text());
    return 0;
}

int cmd_bpe_train(const std::string& in_dir, const std::string& out_path, int vocab_size,
                  int min_freq) {
    std::vector<Mulpi> bag;
    for (const auto& path : list_files(in_dir, {".qs"})) {
        QuantizedScore score = score_from_text(read_text(path));
        auto mulpies = extract_mulpies(score);
        bag.insert(bag.end(), mulpies.begin(), mulpies.end());
    }
    MergeVocab vocab = train(bag, vocab_size, min_freq);
    write_text(out_path, vocab.to_text());
    std::cout << "trained " << vocab.merge_count() << " merges from " << bag.size()
              << " mulpies\n";
    return 0;
}

int cmd_encode(const std::string& in_dir, const std::string& vocab_path,
               const std::string& out_dir) {
    MergeVocab vocab = MergeVocab::from_text(read_text(vocab_path));
    fs::create_directories(out_dir);
    int n = 0;
    for (const auto& path : list_files(in_dir, {".qs"})) {
        QuantizedScore score = score_from_text(read_text(path));
        TokenSeq seq = encode(score, detect_score_chords(score), vocab);
        std::string base = fs::path(path).stem().string();
        write_text((fs::path(out_dir) / (base + ".tok")).string(), tokens_to_text(seq));
        ++n;
    }
    std::cout << "encoded " << n << " scores\n";
    return 0;
}

int cmd_train(const std::string& tokens_dir, const std::string& ckpt_path,
              const std::string& log_path, const ModelConfig& model_config,
              const TrainConfig& train_config) {
    std::vector<TokenSeq> corpus;
    for (const auto& path : list_files(tokens_dir, {".tok"}))
        corpus.push_back(tokens_from_text(read_text(path)));
    TrainResult result = train_loop(model_config, train_config, corpus, ckpt_path);
    if (!log_path.empty()) write_text(log_path, loss_log_to_text(result.log));
    if (!result.log.empty())
        std::cout << "final loss " << result.log.back().loss.total << " after "
                  << result.log.size() << " steps\n";
    return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& out_path,
                 const std::string& mode, const std::string& prime_path,
                 const std::string& chords_path, const std::string& vocab_path,
                 SampleConfig sample) {
    auto [config, params] = load_checkpoint(ckpt_path);
    TokenSeq prime;
    std::vector<ChordLabel> chords;
    if (mode == "unconditional") {
        sample.mode = SampleMode::Unconditional;
    } else if (mode == "prime") {
        sample.mode = SampleMode::Prime;
        if (prime_path.empty()) throw std::invalid_argument("prime mode needs --prime");
        prime = tokens_from_text(read_text(prime_path));
    } else if (mode == "chord") {
        sample.mode = SampleMode::ChordSequence;
        if (chords_path.empty()) throw std::invalid_argument("chord mode needs --chords");
        std::istringstream is(read_text(chords_path));
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) chords.push_back(ChordLabel::from_text(line));
    } else {
        throw std::invalid_argument("unknown mode: " + mode);
    }
    if (!vocab_path.empty())
        sample.pitchset_limit = MergeVocab::from_text(read_text(vocab_path)).size();
    else
        sample.pitchset_limit = kBaseVocab;  // singletons only without a vocab
    TokenSeq seq = generate(params, config, sample,
                            sample.mode == SampleMode::Prime ? &prime : nullptr,
                            sample.mode == SampleMode::ChordSequence ? &chords : nullptr);
    write_text(out_path, tokens_to_text(seq));
    std::cout << "generated " << seq.size() << " tuples\n";
    return 0;
}

int cmd_render(const std::string& in_path, const std::string& vocab_path,
               const std::string& out_path, double tempo) {
    MergeVocab vocab = MergeVocab::from_text(read_text(vocab_path));
    TokenSeq seq = tokens_from_text(read_text(in_path));
    DecodeResult decoded = decode(seq, vocab);
    write_file(out_path, write_midi(decoded.score, tempo).bytes);
    std::cout << "rendered " << decoded.score.note_count() << " notes\n";
    return 0;
}

int cmd_gradcheck(const ModelConfig& model_config, uint64_t seed, double h) {
    ModelConfig config = model_config;
    config.seed = seed;
    // Small pitch-set budget keeps the parameter count desk-scale.
    config.pitchset_vocab = std::min(config.pitchset_vocab, 160);
    ModelParams params = ModelParams::init(config);

    QuantizedScore score;
    score.measures = {32, 32};
    score.tracks.push_back({0, {{60, 0, 8, 80}, {64, 0, 8, 80}, {67, 8, 16, 80}}});
    score.tracks.push_back({40, {{72, 32, 8, 80}, {76, 40, 8, 80}}});
    TokenSeq seq = encode(score, detect_score_chords(score), MergeVocab());
    Batch batch = make_batch(seq, config);

    FiniteDiffReport report = finite_diff_check(params, batch, config, h);
    std::cout << "parameters " << params.param_count() << '\n'
              << "max relative error " << report.max_rel_error << '\n'
              << "worst tensor " << report.worst_tensor << " (analytic "
              << report.worst_analytic << ", numeric " << report.worst_numeric << ")\n"
              << (report.max_rel_error <= 1e-4 ? "PASS" : "FAIL") << '\n';
    return report.max_rel_error <= 1e-4 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"symbolic music pipeline: MIDI -> tokens -> vocab -> model -> MIDI"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags override");

    std::string in_dir, out_dir, out_path, vocab_path, tokens_dir, ckpt_path, log_path;
    std::string mode = "unconditional", prime_path, chords_path, in_path;
    int vocab_size = 735, min_freq = 2;
    double tempo = 120.0, h = 1e-4;
    ModelFlags model;
    TrainConfig train_config;
    SampleConfig sample;
    uint64_t seed = 0;

    auto* ingest = app.add_subcommand("ingest", "MIDI directory -> canonical score cache");
    ingest->add_option("--in", in_dir, "MIDI directory")->required();
    ingest->add_option("--out", out_dir, "score cache directory")->required();

    auto* stats = app.add_subcommand("stats", "corpus statistics over a MIDI directory");
    stats->add_option("--in", in_dir, "MIDI directory")->required();
    stats->add_option("--out", out_path, "output file (default stdout)");

    auto* bpe = app.add_subcommand("bpe-train", "learn pitch-set merges from a score cache");
    bpe->add_option("--in", in_dir, "score cache directory")->required();
    bpe->add_option("--out", out_path, "vocab file")->required();
    bpe->add_option("--vocab-size", vocab_size, "target vocab size incl. 128 singletons");
    bpe->add_option("--min-freq", min_freq, "stop when the best pair count drops below this");

    auto* enc = app.add_subcommand("encode", "score cache -> token files");
    enc->add_option("--in", in_dir, "score cache directory")->required();
    enc->add_option("--vocab", vocab_path, "merge vocab file")->required();
    enc->add_option("--out", out_dir, "token directory")->required();

    auto* trn = app.add_subcommand("train", "train the decoder on token files");
    trn->add_option("--tokens", tokens_dir, "token directory")->required();
    trn->add_option("--out", ckpt_path, "checkpoint file")->required();
    trn->add_option("--log", log_path, "loss log file");
    model.add_to(trn);
    trn->add_option("--lr", train_config.lr, "learning rate");
    trn->add_option("--batch-size", train_config.batch_size, "sequences per step");
    trn->add_option("--steps", train_config.max_steps, "optimizer steps");
    trn->add_option("--grad-clip", train_config.grad_clip, "gradient norm clip");
    trn->add_option("--checkpoint-every", train_config.checkpoint_every,
                    "checkpoint cadence in steps");
    trn->add_option("--seed", train_config.seed, "RNG seed")->required();

    auto* gen = app.add_subcommand("generate", "sample a token sequence from a checkpoint");
    gen->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    gen->add_option("--out", out_path, "output token file")->required();
    gen->add_option("--mode", mode, "unconditional | prime | chord");
    gen->add_option("--prime", prime_path, "prime token file (prime mode)");
    gen->add_option("--chords", chords_path, "chord list file, one token per line (chord mode)");
    gen->add_option("--vocab", vocab_path, "merge vocab file (bounds pitch-set sampling)");
    gen->add_option("--temperature", sample.temperature, "softmax temperature");
    gen->add_option("--nucleus-p", sample.nucleus_p, "nucleus mass");
    gen->add_option("--max-tuples", sample.max_tuples, "generation budget");
    gen->add_option("--seed", sample.seed, "RNG seed")->required();

    auto* ren = app.add_subcommand("render", "token file -> standard MIDI file");
    ren->add_option("--in", in_path, "token file")->required();
    ren->add_option("--vocab", vocab_path, "merge vocab file")->required();
    ren->add_option("--out", out_path, "MIDI file")->required();
    ren->add_option("--tempo", tempo, "output tempo in BPM");

    auto* grd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    ModelFlags grd_model;
    grd_model.config.embed_dim = 16;
    grd_model.config.layers = 1;
    grd_model.config.heads = 2;
    grd_model.add_to(grd);
    grd->add_option("--seed", seed, "parameter init seed");
    grd->add_option("--step", h, "central-difference step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(in_dir, out_dir);
        if (*stats) return cmd_stats(in_dir, out_path);
        if (*bpe) return cmd_bpe_train(in_dir, out_path, vocab_size, min_freq);
        if (*enc) return cmd_encode(in_dir, vocab_path, out_dir);
        if (*trn) return cmd_train(tokens_dir, ckpt_path, log_path, model.config, train_config);
        if (*gen)
            return cmd_generate(ckpt_path, out_path, mode, prime_path, chords_path, vocab_path,
                                sample);
        if (*ren) return cmd_render(in_path, vocab_path, out_path, tempo);
        if (*grd) return cmd_gradcheck(grd_model.config, seed, h);
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
