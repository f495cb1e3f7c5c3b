#ifndef SCORELM_TRAINER_HPP
#define SCORELM_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "scorelm/codec.hpp"
#include "scorelm/model.hpp"

namespace scorelm {

struct TrainConfig {
    double lr = 3e-4;
    int batch_size = 8;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    double grad_clip = 1.0;
    int max_steps = 1000;
    uint64_t seed = 0;
    int checkpoint_every = 0;  // 0: only at the end

    void validate() const;
};

class AdamW {
public:
    AdamW(const ModelParams& params, const TrainConfig& config);
    // In-place decoupled-weight-decay update from summed gradients.
    void step(ModelParams& params, const ModelParams& grads);
    int steps_taken() const { return t_; }

private:
    TrainConfig config_;
    ModelParams m_, v_;
    int t_ = 0;
};

// Scales gradients so their global L2 norm is at most `max_norm`.
// Returns the pre-clip norm.
double clip_gradients(ModelParams& grads, double max_norm);

struct StepLog {
    int step;
    LossParts loss;
};

struct TrainResult {
    ModelParams params;
    std::vector<StepLog> log;
};

// Loss log line format: step<TAB>total<TAB>evt<TAB>dur<TAB>trk<TAB>inst
std::string loss_log_to_text(const std::vector<StepLog>& log);

// Cuts a token sequence into training windows of at most max_seq + 1
// tuples, each starting at BOS or a measure boundary (BOM).
std::vector<TokenSeq> window_sequence(const TokenSeq& seq, int max_seq);

// AdamW training over token sequences. Batches draw windows uniformly
// with the seeded RNG; gradients accumulate over the batch and are
// clipped before the update. Deterministic given (seed, config, corpus).
// Aborts with an exception when the loss turns non-finite.
TrainResult train_loop(const ModelConfig& model_config, const TrainConfig& train_config,
                       const std::vector<TokenSeq>& corpus,
                       const std::string& checkpoint_path = "");

struct FiniteDiffReport {
    double max_rel_error = 0;
    std::string worst_tensor;
    double worst_analytic = 0, worst_numeric = 0;
};

// Central-difference check of gradients() over every parameter.
FiniteDiffReport finite_diff_check(const ModelParams& params, const Batch& batch,
                                   const ModelConfig& config, double h = 1e-4);

}  // namespace scorelm

#endif
