#ifndef SCORELM_MODEL_HPP
#define SCORELM_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scorelm/tokens.hpp"

namespace scorelm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Desk-scale defaults; the full-scale values (512 dims, 12 layers,
// 16 heads, 4096 context) are usable through the same fields.
struct ModelConfig {
    int embed_dim = 64;
    int layers = 2;
    int heads = 4;
    int max_seq = 512;
    int pitchset_vocab = 607;  // event vocab = 393 structural + this
    int duration_vocab = 66;   // DUR_NULL + 64 durations + pad
    int instrument_vocab = 131;
    int track_vocab = 33;
    int max_measure = 256;
    int max_onset = 129;
    int max_track_pos = 33;
    uint64_t seed = 0;

    int event_vocab() const { return kStructuralVocab + pitchset_vocab; }
    void validate() const;
};

struct LayerParams {
    Vec ln1_gamma, ln1_beta;
    Mat wq, wk, wv, wo;        // embed_dim x embed_dim
    Vec ln2_gamma, ln2_beta;
    Mat w1;                    // embed_dim x 4*embed_dim
    Vec b1;
    Mat w2;                    // 4*embed_dim x embed_dim
    Vec b2;
};

struct HeadParams {
    Mat w;  // embed_dim x head_vocab
    Vec b;
};

struct ModelParams {
    // Channel embedding tables, rows indexed by channel id.
    Mat event_emb, dur_emb, inst_emb;
    // 3-D positional tables, rows indexed by the position ordinal.
    Mat measure_pos, onset_pos, track_pos;
    std::vector<LayerParams> layers;
    Vec final_ln_gamma, final_ln_beta;
    HeadParams head_event, head_dur, head_track, head_inst;

    // Visits every tensor in declaration order (the checkpoint order).
    // Vectors appear as n x 1 maps.
    void for_each(const std::function<void(const std::string&, Eigen::Map<Mat>)>& fn);
    void for_each(
        const std::function<void(const std::string&, Eigen::Map<const Mat>)>& fn) const;

    long long param_count() const;
    static ModelParams init(const ModelConfig& config);
    static ModelParams zeros_like(const ModelParams& other);
};

// One training sequence with next-step targets. Instrument inputs are
// always the mask id; targets of -1 are excluded from the loss.
struct Batch {
    std::vector<int> event_in, dur_in, inst_in, track_in;
    std::vector<int> measure_ix, onset_ix, track_ix;
    std::vector<int> event_tgt, dur_tgt, track_tgt, inst_tgt;

    int length() const { return static_cast<int>(event_in.size()); }
};

// Builds a batch from a grammar-valid token window: inputs are tuples
// [0, n-2] with the instrument channel masked, targets are tuples
// [1, n-1]. Duration targets exist on pitch-set steps, instrument
// targets on CC and pitch-set steps, track targets where the ordinal
// is set.
Batch make_batch(const TokenSeq& window, const ModelConfig& config);

// Sum of the six channel/positional embeddings per step.
Mat embed(const ModelParams& params, const Batch& batch, const ModelConfig& config);

// Causal linear attention with feature map elu(x)+1 and running-sum
// normalization (epsilon 1e-6). Inputs and output are seq x head_dim.
Mat causal_linear_attention(const Mat& q, const Mat& k, const Mat& v);

// O(T^2) reference implementation of the same function; test oracle.
Mat causal_linear_attention_quadratic(const Mat& q, const Mat& k, const Mat& v);

struct Logits {
    Mat event, dur, track, inst;  // seq x head_vocab
};

struct LossParts {
    double total = 0, event = 0, dur = 0, track = 0, inst = 0;
};

struct ForwardCache;  // opaque; defined in model.cpp

Logits forward(const ModelParams& params, const Batch& batch, const ModelConfig& config);
LossParts loss(const Logits& logits, const Batch& batch);

struct GradientResult {
    LossParts loss;
    ModelParams grads;  // same shapes as the parameters
};

// Exact gradient of the total loss for every parameter tensor.
GradientResult gradients(const ModelParams& params, const Batch& batch,
                         const ModelConfig& config);

// Incremental decoding: per-layer running attention state, one step at
// a time. Produces logits identical to forward() on the same prefix.
class InferenceState {
public:
    InferenceState(const ModelParams& params, const ModelConfig& config);
    // Feeds one input tuple (already masked) and returns its logits.
    Logits step(int event_in, int dur_in, int track_in, int m_ix, int o_ix, int r_ix);
    int position() const { return t_; }

private:
    const ModelParams& params_;
    ModelConfig config_;
    int t_ = 0;
    struct HeadState {
        Mat s;  // head_dim x head_dim
        Vec z;  // head_dim
    };
    std::vector<std::vector<HeadState>> state_;  // [layer][head]
};

// Versioned binary checkpoint: magic, version, config fields as
// little-endian int64, then each tensor as rank/dims plus row-major
// little-endian doubles. Save/load roundtrips bit-exactly.
void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params);
std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path);

}  // namespace scorelm

#endif
