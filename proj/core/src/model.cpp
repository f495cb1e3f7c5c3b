#include "scorelm/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "scorelm/bpe.hpp"

namespace scorelm {

namespace {

constexpr double kAttnEps = 1e-6;
constexpr double kLnEps = 1e-5;

double phi(double x) { return x > 0 ? x + 1 : std::exp(x); }
double phi_grad(double x) { return x > 0 ? 1.0 : std::exp(x); }
double gelu(double x) { return 0.5 * x * (1 + std::erf(x / std::sqrt(2.0))); }
double gelu_grad(double x) {
    double cdf = 0.5 * (1 + std::erf(x / std::sqrt(2.0)));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    return cdf + x * pdf;
}

struct LnCache {
    Mat xhat;     // seq x dim
    Vec inv_std;  // seq
};

Mat layer_norm(const Mat& x, const Vec& gamma, const Vec& beta, LnCache& cache) {
    const int T = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
    cache.xhat.resize(T, d);
    cache.inv_std.resize(T);
    Mat y(T, d);
    for (int t = 0; t < T; ++t) {
        double mu = x.row(t).mean();
        double var = (x.row(t).array() - mu).square().mean();
        double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std(t) = inv;
        cache.xhat.row(t) = (x.row(t).array() - mu) * inv;
        y.row(t) = cache.xhat.row(t).cwiseProduct(gamma.transpose()) + beta.transpose();
    }
    return y;
}

// dy -> dx; accumulates dgamma/dbeta.
Mat layer_norm_backward(const Mat& dy, const LnCache& cache, const Vec& gamma, Vec& dgamma,
                        Vec& dbeta) {
    const int T = static_cast<int>(dy.rows()), d = static_cast<int>(dy.cols());
    Mat dx(T, d);
    for (int t = 0; t < T; ++t) {
        Eigen::RowVectorXd g = dy.row(t).cwiseProduct(gamma.transpose());
        double m1 = g.mean();
        double m2 = g.cwiseProduct(cache.xhat.row(t)).mean();
        dx.row(t) =
            (g.array() - m1 - cache.xhat.row(t).array() * m2) * cache.inv_std(t);
        dgamma += dy.row(t).cwiseProduct(cache.xhat.row(t)).transpose();
        dbeta += dy.row(t).transpose();
    }
    return dx;
}

struct AttnCache {
    Mat phi_q, phi_k;  // seq x head_dim
    Mat v;             // seq x head_dim
    Mat out;           // seq x head_dim
    Vec den;           // seq
};

Mat attn_forward(const Mat& q, const Mat& k, const Mat& v, AttnCache& cache) {
    const int T = static_cast<int>(q.rows()), d = static_cast<int>(q.cols());
    cache.phi_q = q.unaryExpr([](double x) { return phi(x); });
    cache.phi_k = k.unaryExpr([](double x) { return phi(x); });
    cache.v = v;
    cache.out.resize(T, d);
    cache.den.resize(T);
    Mat s = Mat::Zero(d, d);
    Vec z = Vec::Zero(d);
    for (int t = 0; t < T; ++t) {
        s.noalias() += cache.phi_k.row(t).transpose() * v.row(t);
        z += cache.phi_k.row(t).transpose();
        double den = cache.phi_q.row(t).dot(z.transpose()) + kAttnEps;
        cache.den(t) = den;
        cache.out.row(t) = (cache.phi_q.row(t) * s) / den;
    }
    return cache.out;
}

// d_out -> (dq, dk, dv), linear time via one forward and one reverse
// pass of running sums.
void attn_backward(const Mat& q, const Mat& k, const AttnCache& cache, const Mat& d_out,
                   Mat& dq, Mat& dk, Mat& dv) {
    const int T = static_cast<int>(q.rows()), d = static_cast<int>(q.cols());
    dq.resize(T, d);
    dk.resize(T, d);
    dv.resize(T, d);
    Mat s = Mat::Zero(d, d);
    Vec z = Vec::Zero(d);
    for (int t = 0; t < T; ++t) {
        s.noalias() += cache.phi_k.row(t).transpose() * cache.v.row(t);
        z += cache.phi_k.row(t).transpose();
        Vec a = d_out.row(t).transpose() / cache.den(t);
        double b = d_out.row(t).dot(cache.out.row(t)) / cache.den(t);
        Vec d_phi_q = s * a - b * z;
        dq.row(t) = d_phi_q.transpose().cwiseProduct(
            q.row(t).unaryExpr([](double x) { return phi_grad(x); }));
    }
    Mat m = Mat::Zero(d, d);  // sum over t >= s of phi_q_t a_t^T
    Vec u = Vec::Zero(d);     // sum over t >= s of b_t phi_q_t
    for (int t = T - 1; t >= 0; --t) {
        Vec a = d_out.row(t).transpose() / cache.den(t);
        double b = d_out.row(t).dot(cache.out.row(t)) / cache.den(t);
        m.noalias() += cache.phi_q.row(t).transpose() * a.transpose();
        u += b * cache.phi_q.row(t).transpose();
        Vec d_phi_k = m * cache.v.row(t).transpose() - u;
        dk.row(t) = d_phi_k.transpose().cwiseProduct(
            k.row(t).unaryExpr([](double x) { return phi_grad(x); }));
        dv.row(t) = (m.transpose() * cache.phi_k.row(t).transpose()).transpose();
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (embed_dim < 1 || embed_dim % heads != 0)
        throw std::invalid_argument("embed_dim must be a positive multiple of heads");
    if (layers < 1) throw std::invalid_argument("layers must be >= 1");
    if (max_seq < 2) throw std::invalid_argument("max_seq must be >= 2");
    if (pitchset_vocab < kBaseVocab)
        throw std::invalid_argument("pitchset vocab below the 128 singleton tokens");
    if (duration_vocab < kMaxDuration + 2 || instrument_vocab < kInstNull + 1 ||
        track_vocab < 2)
        throw std::invalid_argument("head vocab sizes too small");
}

Mat causal_linear_attention(const Mat& q, const Mat& k, const Mat& v) {
    AttnCache cache;
    return attn_forward(q, k, v, cache);
}

Mat causal_linear_attention_quadratic(const Mat& q, const Mat& k, const Mat& v) {
    const int T = static_cast<int>(q.rows()), d = static_cast<int>(q.cols());
    Mat phi_q = q.unaryExpr([](double x) { return phi(x); });
    Mat phi_k = k.unaryExpr([](double x) { return phi(x); });
    Mat out = Mat::Zero(T, d);
    for (int t = 0; t < T; ++t) {
        Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(d);
        double den = kAttnEps;
        for (int s = 0; s <= t; ++s) {
            double w = phi_q.row(t).dot(phi_k.row(s));
            num += w * v.row(s);
            den += w;
        }
        out.row(t) = num / den;
    }
    return out;
}

void ModelParams::for_each(const std::function<void(const std::string&, Eigen::Map<Mat>)>& fn) {
    auto mat = [&fn](const std::string& name, Mat& m) {
        fn(name, Eigen::Map<Mat>(m.data(), m.rows(), m.cols()));
    };
    auto vec = [&fn](const std::string& name, Vec& v) {
        fn(name, Eigen::Map<Mat>(v.data(), v.size(), 1));
    };
    mat("event_emb", event_emb);
    mat("dur_emb", dur_emb);
    mat("inst_emb", inst_emb);
    mat("measure_pos", measure_pos);
    mat("onset_pos", onset_pos);
    mat("track_pos", track_pos);
    for (size_t l = 0; l < layers.size(); ++l) {
        std::string p = "layer" + std::to_string(l) + ".";
        auto& lay = layers[l];
        vec(p + "ln1_gamma", lay.ln1_gamma);
        vec(p + "ln1_beta", lay.ln1_beta);
        mat(p + "wq", lay.wq);
        mat(p + "wk", lay.wk);
        mat(p + "wv", lay.wv);
        mat(p + "wo", lay.wo);
        vec(p + "ln2_gamma", lay.ln2_gamma);
        vec(p + "ln2_beta", lay.ln2_beta);
        mat(p + "w1", lay.w1);
        vec(p + "b1", lay.b1);
        mat(p + "w2", lay.w2);
        vec(p + "b2", lay.b2);
    }
    vec("final_ln_gamma", final_ln_gamma);
    vec("final_ln_beta", final_ln_beta);
    mat("head_event.w", head_event.w);
    vec("head_event.b", head_event.b);
    mat("head_dur.w", head_dur.w);
    vec("head_dur.b", head_dur.b);
    mat("head_track.w", head_track.w);
    vec("head_track.b", head_track.b);
    mat("head_inst.w", head_inst.w);
    vec("head_inst.b", head_inst.b);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, Eigen::Map<const Mat>)>& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&fn](const std::string& name, Eigen::Map<Mat> m) {
            fn(name, Eigen::Map<const Mat>(m.data(), m.rows(), m.cols()));
        });
}

long long ModelParams::param_count() const {
    long long n = 0;
    for_each([&n](const std::string&, Eigen::Map<const Mat> m) { n += m.size(); });
    return n;
}

ModelParams ModelParams::init(const ModelConfig& config) {
    config.validate();
    const int d = config.embed_dim;
    ModelParams p;
    p.event_emb.resize(config.event_vocab(), d);
    p.dur_emb.resize(config.duration_vocab, d);
    p.inst_emb.resize(config.instrument_vocab, d);
    p.measure_pos.resize(config.max_measure + 1, d);
    p.onset_pos.resize(config.max_onset + 1, d);
    p.track_pos.resize(config.max_track_pos + 1, d);
    p.layers.resize(config.layers);
    for (auto& lay : p.layers) {
        lay.ln1_gamma = Vec::Ones(d);
        lay.ln1_beta = Vec::Zero(d);
        lay.wq.resize(d, d);
        lay.wk.resize(d, d);
        lay.wv.resize(d, d);
        lay.wo.resize(d, d);
        lay.ln2_gamma = Vec::Ones(d);
        lay.ln2_beta = Vec::Zero(d);
        lay.w1.resize(d, 4 * d);
        lay.b1 = Vec::Zero(4 * d);
        lay.w2.resize(4 * d, d);
        lay.b2 = Vec::Zero(d);
    }
    p.final_ln_gamma = Vec::Ones(d);
    p.final_ln_beta = Vec::Zero(d);
    p.head_event.w.resize(d, config.event_vocab());
    p.head_event.b = Vec::Zero(config.event_vocab());
    p.head_dur.w.resize(d, config.duration_vocab);
    p.head_dur.b = Vec::Zero(config.duration_vocab);
    p.head_track.w.resize(d, config.track_vocab);
    p.head_track.b = Vec::Zero(config.track_vocab);
    p.head_inst.w.resize(d, config.instrument_vocab);
    p.head_inst.b = Vec::Zero(config.instrument_vocab);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> dist(0.0, 0.02);
    p.for_each([&](const std::string& name, Eigen::Map<Mat> m) {
        // Norm scales/shifts and biases keep their deterministic init.
        std::string leaf = name.substr(name.rfind('.') + 1);
        if (leaf == "b" || leaf == "b1" || leaf == "b2" ||
            name.find("gamma") != std::string::npos || name.find("beta") != std::string::npos)
            return;
        for (long i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    });
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    ModelParams z = other;
    z.for_each([](const std::string&, Eigen::Map<Mat> m) { m.setZero(); });
    return z;
}

Batch make_batch(const TokenSeq& window, const ModelConfig& config) {
    if (window.size() < 2) throw std::invalid_argument("window must have at least 2 tuples");
    Batch b;
    const int T = static_cast<int>(window.size()) - 1;
    if (T > config.max_seq) throw std::invalid_argument("window longer than max_seq");
    for (int t = 0; t < T; ++t) {
        const auto& in = window[t];
        const auto& tgt = window[t + 1];
        int evt_in = in.event.id();
        int evt_tgt = tgt.event.id();
        if (evt_in >= config.event_vocab() || evt_tgt >= config.event_vocab())
            throw std::out_of_range("event id outside the configured vocabulary");
        b.event_in.push_back(evt_in);
        b.dur_in.push_back(in.duration);
        b.inst_in.push_back(kInstMask);
        b.track_in.push_back(in.track_ord);
        if (in.pos.measure > config.max_measure || in.pos.onset > config.max_onset ||
            in.pos.track > config.max_track_pos)
            throw std::out_of_range("position ordinal outside the configured bounds");
        b.measure_ix.push_back(in.pos.measure);
        b.onset_ix.push_back(in.pos.onset);
        b.track_ix.push_back(in.pos.track);

        bool tgt_note = tgt.event.kind == EventToken::Kind::PitchSet;
        bool tgt_cc = tgt.event.kind == EventToken::Kind::Cc;
        b.event_tgt.push_back(evt_tgt);
        b.dur_tgt.push_back(tgt_note ? tgt.duration : -1);
        b.track_tgt.push_back(tgt.track_ord > 0 ? tgt.track_ord : -1);
        b.inst_tgt.push_back(tgt_note || tgt_cc ? tgt.instrument : -1);
    }
    return b;
}

Mat embed(const ModelParams& params, const Batch& batch, const ModelConfig& config) {
    const int T = batch.length(), d = config.embed_dim;
    Mat x(T, d);
    for (int t = 0; t < T; ++t) {
        x.row(t) = params.event_emb.row(batch.event_in[t]) +
                   params.dur_emb.row(batch.dur_in[t]) +
                   params.inst_emb.row(batch.inst_in[t]) +
                   params.measure_pos.row(batch.measure_ix[t]) +
                   params.onset_pos.row(batch.onset_ix[t]) +
                   params.track_pos.row(batch.track_ix[t]);
    }
    return x;
}

namespace {

struct LayerCache {
    Mat x_in;
    LnCache ln1;
    Mat a, q, k, v;
    std::vector<AttnCache> heads;
    Mat concat;  // attention head outputs, seq x dim
    Mat x_mid;   // after attention residual
    LnCache ln2;
    Mat b, h1, g;
};

struct FullCache {
    Mat x0;
    std::vector<LayerCache> layers;
    LnCache final_ln;
    Mat y;  // final normalized activations
};

void check_finite(const Mat& m, int layer) {
    if (!m.allFinite())
        throw std::runtime_error("non-finite activation in layer " + std::to_string(layer));
}

Logits forward_impl(const ModelParams& params, const Batch& batch, const ModelConfig& config,
                    FullCache* cache) {
    const int d = config.embed_dim;
    const int hd = d / config.heads;
    FullCache local;
    FullCache& c = cache ? *cache : local;
    c.x0 = embed(params, batch, config);
    Mat x = c.x0;
    c.layers.resize(params.layers.size());
    for (size_t l = 0; l < params.layers.size(); ++l) {
        const auto& lay = params.layers[l];
        LayerCache& lc = c.layers[l];
        lc.x_in = x;
        lc.a = layer_norm(x, lay.ln1_gamma, lay.ln1_beta, lc.ln1);
        lc.q.noalias() = lc.a * lay.wq;
        lc.k.noalias() = lc.a * lay.wk;
        lc.v.noalias() = lc.a * lay.wv;
        lc.heads.resize(config.heads);
        lc.concat.resize(x.rows(), d);
        for (int h = 0; h < config.heads; ++h) {
            lc.concat.middleCols(h * hd, hd) =
                attn_forward(lc.q.middleCols(h * hd, hd), lc.k.middleCols(h * hd, hd),
                             lc.v.middleCols(h * hd, hd), lc.heads[h]);
        }
        lc.x_mid = x + lc.concat * lay.wo;
        lc.b = layer_norm(lc.x_mid, lay.ln2_gamma, lay.ln2_beta, lc.ln2);
        lc.h1 = (lc.b * lay.w1).rowwise() + lay.b1.transpose();
        lc.g = lc.h1.unaryExpr([](double v) { return gelu(v); });
        x = lc.x_mid + ((lc.g * lay.w2).rowwise() + lay.b2.transpose());
        check_finite(x, static_cast<int>(l));
    }
    c.y = layer_norm(x, params.final_ln_gamma, params.final_ln_beta, c.final_ln);
    Logits out;
    out.event = (c.y * params.head_event.w).rowwise() + params.head_event.b.transpose();
    out.dur = (c.y * params.head_dur.w).rowwise() + params.head_dur.b.transpose();
    out.track = (c.y * params.head_track.w).rowwise() + params.head_track.b.transpose();
    out.inst = (c.y * params.head_inst.w).rowwise() + params.head_inst.b.transpose();
    return out;
}

// Mean cross-entropy over unmasked targets; also emits d(head mean CE)
// w.r.t. the logits when dlogits is non-null.
double head_loss(const Mat& logits, const std::vector<int>& targets, Mat* dlogits) {
    const int T = static_cast<int>(logits.rows());
    int count = 0;
    for (int t = 0; t < T; ++t)
        if (targets[t] >= 0) ++count;
    if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
    if (count == 0) return 0.0;
    double total = 0;
    for (int t = 0; t < T; ++t) {
        if (targets[t] < 0) continue;
        double mx = logits.row(t).maxCoeff();
        Eigen::RowVectorXd ex = (logits.row(t).array() - mx).exp();
        double sum = ex.sum();
        total += std::log(sum) + mx - logits(t, targets[t]);
        if (dlogits) {
            dlogits->row(t) = ex / (sum * count);
            (*dlogits)(t, targets[t]) -= 1.0 / count;
        }
    }
    return total / count;
}

}  // namespace

Logits forward(const ModelParams& params, const Batch& batch, const ModelConfig& config) {
    return forward_impl(params, batch, config, nullptr);
}

LossParts loss(const Logits& logits, const Batch& batch) {
    LossParts parts;
    parts.event = head_loss(logits.event, batch.event_tgt, nullptr);
    parts.dur = head_loss(logits.dur, batch.dur_tgt, nullptr);
    parts.track = head_loss(logits.track, batch.track_tgt, nullptr);
    parts.inst = head_loss(logits.inst, batch.inst_tgt, nullptr);
    parts.total = parts.event + parts.dur + parts.track + parts.inst;
    return parts;
}

GradientResult gradients(const ModelParams& params, const Batch& batch,
                         const ModelConfig& config) {
    const int d = config.embed_dim;
    const int hd = d / config.heads;
    FullCache cache;
    Logits logits = forward_impl(params, batch, config, &cache);

    GradientResult result;
    result.grads = ModelParams::zeros_like(params);
    ModelParams& g = result.grads;

    Mat d_event, d_dur, d_track, d_inst;
    result.loss.event = head_loss(logits.event, batch.event_tgt, &d_event);
    result.loss.dur = head_loss(logits.dur, batch.dur_tgt, &d_dur);
    result.loss.track = head_loss(logits.track, batch.track_tgt, &d_track);
    result.loss.inst = head_loss(logits.inst, batch.inst_tgt, &d_inst);
    result.loss.total =
        result.loss.event + result.loss.dur + result.loss.track + result.loss.inst;

    // Heads.
    Mat dy = Mat::Zero(cache.y.rows(), d);
    auto head_backward = [&cache, &dy](const HeadParams& head, HeadParams& ghead,
                                       const Mat& dlogits) {
        ghead.w += cache.y.transpose() * dlogits;
        ghead.b += dlogits.colwise().sum().transpose();
        dy.noalias() += dlogits * head.w.transpose();
    };
    head_backward(params.head_event, g.head_event, d_event);
    head_backward(params.head_dur, g.head_dur, d_dur);
    head_backward(params.head_track, g.head_track, d_track);
    head_backward(params.head_inst, g.head_inst, d_inst);

    Mat dx = layer_norm_backward(dy, cache.final_ln, params.final_ln_gamma, g.final_ln_gamma,
                                 g.final_ln_beta);

    for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
        const auto& lay = params.layers[l];
        auto& glay = g.layers[l];
        LayerCache& lc = cache.layers[l];

        // Feed-forward block: x_out = x_mid + gelu(b w1 + b1) w2 + b2
        Mat dg = dx * lay.w2.transpose();
        glay.w2 += lc.g.transpose() * dx;
        glay.b2 += dx.colwise().sum().transpose();
        Mat dh1 = dg.cwiseProduct(lc.h1.unaryExpr([](double v) { return gelu_grad(v); }));
        glay.w1 += lc.b.transpose() * dh1;
        glay.b1 += dh1.colwise().sum().transpose();
        Mat db = dh1 * lay.w1.transpose();
        Mat dx_mid =
            dx + layer_norm_backward(db, lc.ln2, lay.ln2_gamma, glay.ln2_gamma, glay.ln2_beta);

        // Attention block: x_mid = x_in + concat * wo
        glay.wo += lc.concat.transpose() * dx_mid;
        Mat d_concat = dx_mid * lay.wo.transpose();
        Mat dq(lc.q.rows(), d), dk(lc.k.rows(), d), dv(lc.v.rows(), d);
        for (int h = 0; h < config.heads; ++h) {
            Mat dq_h, dk_h, dv_h;
            attn_backward(lc.q.middleCols(h * hd, hd), lc.k.middleCols(h * hd, hd),
                          lc.heads[h], d_concat.middleCols(h * hd, hd), dq_h, dk_h, dv_h);
            dq.middleCols(h * hd, hd) = dq_h;
            dk.middleCols(h * hd, hd) = dk_h;
            dv.middleCols(h * hd, hd) = dv_h;
        }
        glay.wq += lc.a.transpose() * dq;
        glay.wk += lc.a.transpose() * dk;
        glay.wv += lc.a.transpose() * dv;
        Mat da = dq * lay.wq.transpose() + dk * lay.wk.transpose() + dv * lay.wv.transpose();
        dx = dx_mid +
             layer_norm_backward(da, lc.ln1, lay.ln1_gamma, glay.ln1_gamma, glay.ln1_beta);
    }

    // Embedding scatter-add.
    for (int t = 0; t < batch.length(); ++t) {
        g.event_emb.row(batch.event_in[t]) += dx.row(t);
        g.dur_emb.row(batch.dur_in[t]) += dx.row(t);
        g.inst_emb.row(batch.inst_in[t]) += dx.row(t);
        g.measure_pos.row(batch.measure_ix[t]) += dx.row(t);
        g.onset_pos.row(batch.onset_ix[t]) += dx.row(t);
        g.track_pos.row(batch.track_ix[t]) += dx.row(t);
    }
    return result;
}

InferenceState::InferenceState(const ModelParams& params, const ModelConfig& config)
    : params_(params), config_(config) {
    const int hd = config.embed_dim / config.heads;
    state_.resize(config.layers);
    for (auto& layer : state_) {
        layer.resize(config.heads);
        for (auto& h : layer) {
            h.s = Mat::Zero(hd, hd);
            h.z = Vec::Zero(hd);
        }
    }
}

Logits InferenceState::step(int event_in, int dur_in, int track_in, int m_ix, int o_ix,
                            int r_ix) {
    const int d = config_.embed_dim;
    const int hd = d / config_.heads;
    Eigen::RowVectorXd x = params_.event_emb.row(event_in) + params_.dur_emb.row(dur_in) +
                           params_.inst_emb.row(kInstMask) + params_.measure_pos.row(m_ix) +
                           params_.onset_pos.row(o_ix) + params_.track_pos.row(r_ix);
    (void)track_in;  // the track channel enters via the positional table
    auto ln_row = [](const Eigen::RowVectorXd& r, const Vec& gamma, const Vec& beta) {
        double mu = r.mean();
        double var = (r.array() - mu).square().mean();
        Eigen::RowVectorXd xhat = (r.array() - mu) / std::sqrt(var + kLnEps);
        return Eigen::RowVectorXd(xhat.cwiseProduct(gamma.transpose()) + beta.transpose());
    };
    for (size_t l = 0; l < params_.layers.size(); ++l) {
        const auto& lay = params_.layers[l];
        Eigen::RowVectorXd a = ln_row(x, lay.ln1_gamma, lay.ln1_beta);
        Eigen::RowVectorXd q = a * lay.wq, k = a * lay.wk, v = a * lay.wv;
        Eigen::RowVectorXd concat(d);
        for (int h = 0; h < config_.heads; ++h) {
            auto& hs = state_[l][h];
            Eigen::RowVectorXd phi_q =
                q.segment(h * hd, hd).unaryExpr([](double x) { return phi(x); });
            Eigen::RowVectorXd phi_k =
                k.segment(h * hd, hd).unaryExpr([](double x) { return phi(x); });
            hs.s.noalias() += phi_k.transpose() * v.segment(h * hd, hd);
            hs.z += phi_k.transpose();
            double den = phi_q.dot(hs.z.transpose()) + kAttnEps;
            concat.segment(h * hd, hd) = (phi_q * hs.s) / den;
        }
        Eigen::RowVectorXd x_mid = x + concat * lay.wo;
        Eigen::RowVectorXd b = ln_row(x_mid, lay.ln2_gamma, lay.ln2_beta);
        Eigen::RowVectorXd h1 = b * lay.w1 + lay.b1.transpose();
        Eigen::RowVectorXd gv = h1.unaryExpr([](double v) { return gelu(v); });
        x = x_mid + gv * lay.w2 + lay.b2.transpose();
    }
    Eigen::RowVectorXd y = ln_row(x, params_.final_ln_gamma, params_.final_ln_beta);
    ++t_;
    Logits out;
    out.event = y * params_.head_event.w + params_.head_event.b.transpose();
    out.dur = y * params_.head_dur.w + params_.head_dur.b.transpose();
    out.track = y * params_.head_track.w + params_.head_track.b.transpose();
    out.inst = y * params_.head_inst.w + params_.head_inst.b.transpose();
    return out;
}

namespace {

constexpr uint64_t kCheckpointMagic = 0x534c4d434b505431ull;  // "SLMCKPT1"
constexpr int64_t kCheckpointVersion = 1;

void put_i64(std::ostream& os, int64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i) & 0xff);
    os.write(reinterpret_cast<char*>(buf), 8);
}

int64_t get_i64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw std::runtime_error("truncated checkpoint");
    int64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | buf[i];
    return v;
}

void put_f64(std::ostream& os, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_i64(os, static_cast<int64_t>(bits));
}

double get_f64(std::istream& is) {
    uint64_t bits = static_cast<uint64_t>(get_i64(is));
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    put_i64(os, static_cast<int64_t>(kCheckpointMagic));
    put_i64(os, kCheckpointVersion);
    for (int64_t v : {static_cast<int64_t>(config.embed_dim), static_cast<int64_t>(config.layers),
                      static_cast<int64_t>(config.heads), static_cast<int64_t>(config.max_seq),
                      static_cast<int64_t>(config.pitchset_vocab),
                      static_cast<int64_t>(config.duration_vocab),
                      static_cast<int64_t>(config.instrument_vocab),
                      static_cast<int64_t>(config.track_vocab),
                      static_cast<int64_t>(config.max_measure),
                      static_cast<int64_t>(config.max_onset),
                      static_cast<int64_t>(config.max_track_pos),
                      static_cast<int64_t>(config.seed)})
        put_i64(os, v);
    params.for_each([&os](const std::string&, Eigen::Map<const Mat> m) {
        put_i64(os, 2);
        put_i64(os, m.rows());
        put_i64(os, m.cols());
        for (long r = 0; r < m.rows(); ++r)
            for (long c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
    });
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    if (static_cast<uint64_t>(get_i64(is)) != kCheckpointMagic)
        throw std::runtime_error("bad checkpoint magic: " + path);
    if (get_i64(is) != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path);
    ModelConfig config;
    config.embed_dim = static_cast<int>(get_i64(is));
    config.layers = static_cast<int>(get_i64(is));
    config.heads = static_cast<int>(get_i64(is));
    config.max_seq = static_cast<int>(get_i64(is));
    config.pitchset_vocab = static_cast<int>(get_i64(is));
    config.duration_vocab = static_cast<int>(get_i64(is));
    config.instrument_vocab = static_cast<int>(get_i64(is));
    config.track_vocab = static_cast<int>(get_i64(is));
    config.max_measure = static_cast<int>(get_i64(is));
    config.max_onset = static_cast<int>(get_i64(is));
    config.max_track_pos = static_cast<int>(get_i64(is));
    config.seed = static_cast<uint64_t>(get_i64(is));
    ModelParams params = ModelParams::init(config);
    params.for_each([&is, &path](const std::string& name, Eigen::Map<Mat> m) {
        if (get_i64(is) != 2) throw std::runtime_error("bad tensor rank in " + path);
        int64_t rows = get_i64(is), cols = get_i64(is);
        if (rows != m.rows() || cols != m.cols())
            throw std::runtime_error("shape mismatch for tensor " + name + " in " + path);
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) m(r, c) = get_f64(is);
    });
    return {config, params};
}

}  // namespace scorelm
