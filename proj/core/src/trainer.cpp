#include "scorelm/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace scorelm {

void TrainConfig::validate() const {
    if (lr <= 0) throw std::invalid_argument("learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (max_steps < 0) throw std::invalid_argument("max steps must be >= 0");
}

AdamW::AdamW(const ModelParams& params, const TrainConfig& config)
    : config_(config),
      m_(ModelParams::zeros_like(params)),
      v_(ModelParams::zeros_like(params)) {}

void AdamW::step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    double bc1 = 1 - std::pow(config_.beta1, t_);
    double bc2 = 1 - std::pow(config_.beta2, t_);
    // Walk the three pytrees in lockstep; for_each order is fixed.
    std::vector<Eigen::Map<Mat>> ps, ms, vs;
    std::vector<Eigen::Map<const Mat>> gs;
    params.for_each([&ps](const std::string&, Eigen::Map<Mat> m) { ps.push_back(m); });
    m_.for_each([&ms](const std::string&, Eigen::Map<Mat> m) { ms.push_back(m); });
    v_.for_each([&vs](const std::string&, Eigen::Map<Mat> m) { vs.push_back(m); });
    grads.for_each([&gs](const std::string&, Eigen::Map<const Mat> m) { gs.push_back(m); });
    for (size_t i = 0; i < ps.size(); ++i) {
        ms[i] = config_.beta1 * ms[i] + (1 - config_.beta1) * gs[i];
        vs[i].array() = config_.beta2 * vs[i].array() + (1 - config_.beta2) * gs[i].array().square();
        Mat mhat = ms[i] / bc1;
        Mat vhat = vs[i] / bc2;
        ps[i].array() -= config_.lr * (mhat.array() / (vhat.array().sqrt() + config_.adam_eps) +
                                       config_.weight_decay * ps[i].array());
    }
}

double clip_gradients(ModelParams& grads, double max_norm) {
    double sq = 0;
    grads.for_each([&sq](const std::string&, Eigen::Map<Mat> m) { sq += m.squaredNorm(); });
    double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
        double scale = max_norm / norm;
        grads.for_each([scale](const std::string&, Eigen::Map<Mat> m) { m *= scale; });
    }
    return norm;
}

std::string loss_log_to_text(const std::vector<StepLog>& log) {
    std::ostringstream os;
    for (const auto& e : log)
        os << e.step << '\t' << e.loss.total << '\t' << e.loss.event << '\t' << e.loss.dur
           << '\t' << e.loss.track << '\t' << e.loss.inst << '\n';
    return os.str();
}

std::vector<TokenSeq> window_sequence(const TokenSeq& seq, int max_seq) {
    const int limit = max_seq + 1;  // window carries inputs plus shifted targets
    std::vector<TokenSeq> windows;
    if (seq.size() <= static_cast<size_t>(limit)) {
        if (seq.size() >= 2) windows.push_back(seq);
        return windows;
    }
    size_t start = 0;
    while (start + 1 < seq.size()) {
        size_t end = std::min(seq.size(), start + limit);
        // Cut back to the last measure boundary so windows stay aligned.
        size_t cut = end;
        if (end < seq.size()) {
            while (cut > start + 1 && seq[cut].event.kind != EventToken::Kind::Bom) --cut;
            if (cut == start + 1) cut = end;  // one giant measure; hard split
        }
        windows.push_back(TokenSeq(seq.begin() + start, seq.begin() + cut));
        if (cut >= seq.size()) break;
        start = cut;
    }
    return windows;
}

TrainResult train_loop(const ModelConfig& model_config, const TrainConfig& train_config,
                       const std::vector<TokenSeq>& corpus, const std::string& checkpoint_path) {
    model_config.validate();
    train_config.validate();
    if (corpus.empty()) throw std::invalid_argument("training corpus is empty");

    std::vector<Batch> windows;
    for (const auto& seq : corpus)
        for (const auto& w : window_sequence(seq, model_config.max_seq))
            windows.push_back(make_batch(w, model_config));
    if (windows.empty()) throw std::invalid_argument("corpus yielded no training windows");

    TrainResult result;
    result.params = ModelParams::init(model_config);
    AdamW opt(result.params, train_config);
    std::mt19937_64 rng(train_config.seed);

    for (int step = 0; step < train_config.max_steps; ++step) {
        ModelParams grads = ModelParams::zeros_like(result.params);
        LossParts parts;
        for (int b = 0; b < train_config.batch_size; ++b) {
            const Batch& batch =
                windows[rng() % windows.size()];
            GradientResult g = gradients(result.params, batch, model_config);
            parts.total += g.loss.total;
            parts.event += g.loss.event;
            parts.dur += g.loss.dur;
            parts.track += g.loss.track;
            parts.inst += g.loss.inst;
            std::vector<Eigen::Map<Mat>> acc;
            grads.for_each([&acc](const std::string&, Eigen::Map<Mat> m) { acc.push_back(m); });
            size_t i = 0;
            g.grads.for_each([&acc, &i](const std::string&, Eigen::Map<Mat> m) {
                acc[i++] += m;
            });
        }
        double inv = 1.0 / train_config.batch_size;
        grads.for_each([inv](const std::string&, Eigen::Map<Mat> m) { m *= inv; });
        parts.total *= inv;
        parts.event *= inv;
        parts.dur *= inv;
        parts.track *= inv;
        parts.inst *= inv;
        if (!std::isfinite(parts.total))
            throw std::runtime_error("non-finite loss at step " + std::to_string(step));
        clip_gradients(grads, train_config.grad_clip);
        opt.step(result.params, grads);
        result.log.push_back({step, parts});
        if (!checkpoint_path.empty() && train_config.checkpoint_every > 0 &&
            (step + 1) % train_config.checkpoint_every == 0)
            save_checkpoint(checkpoint_path, model_config, result.params);
    }
    if (!checkpoint_path.empty())
        save_checkpoint(checkpoint_path, model_config, result.params);
    return result;
}

FiniteDiffReport finite_diff_check(const ModelParams& params, const Batch& batch,
                                   const ModelConfig& config, double h) {
    if (h <= 0) throw std::invalid_argument("finite-difference step must be > 0");
    GradientResult analytic = gradients(params, batch, config);

    FiniteDiffReport report;
    ModelParams work = params;
    std::vector<std::pair<std::string, Eigen::Map<Mat>>> tensors;
    work.for_each([&tensors](const std::string& name, Eigen::Map<Mat> m) {
        tensors.emplace_back(name, m);
    });
    std::vector<Eigen::Map<const Mat>> grad_maps;
    analytic.grads.for_each([&grad_maps](const std::string&, Eigen::Map<const Mat> m) {
        grad_maps.push_back(m);
    });

    for (size_t ti = 0; ti < tensors.size(); ++ti) {
        auto& [name, m] = tensors[ti];
        for (long i = 0; i < m.size(); ++i) {
            double saved = m.data()[i];
            m.data()[i] = saved + h;
            double up = loss(forward(work, batch, config), batch).total;
            m.data()[i] = saved - h;
            double down = loss(forward(work, batch, config), batch).total;
            m.data()[i] = saved;
            double numeric = (up - down) / (2 * h);
            double exact = grad_maps[ti].data()[i];
            double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            double rel = std::abs(numeric - exact) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = name;
                report.worst_analytic = exact;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace scorelm
