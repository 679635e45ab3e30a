#include "saferoute/recurrent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "saferoute/errors.hpp"

namespace saferoute {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

Eigen::VectorXd concat(const Eigen::VectorXd& h, double x) {
    Eigen::VectorXd a(h.size() + 1);
    a.head(h.size()) = h;
    a(h.size()) = x;
    return a;
}

}  // namespace

LstmParams LstmParams::zeros(int hidden_size) {
    LstmParams p;
    p.W_f = p.W_i = p.W_c = p.W_o = Eigen::MatrixXd::Zero(hidden_size, hidden_size + 1);
    p.b_f = p.b_i = p.b_c = p.b_o = Eigen::VectorXd::Zero(hidden_size);
    p.w_out = Eigen::VectorXd::Zero(hidden_size);
    p.b_out = 0.0;
    return p;
}

GruParams GruParams::zeros(int hidden_size, bool use_bias) {
    GruParams p;
    p.W_r = p.W_z = p.W_c = Eigen::MatrixXd::Zero(hidden_size, hidden_size + 1);
    p.b_r = p.b_z = p.b_c = Eigen::VectorXd::Zero(hidden_size);
    p.w_out = Eigen::VectorXd::Zero(hidden_size);
    p.b_out = 0.0;
    p.use_bias = use_bias;
    return p;
}

CellState CellState::zero_lstm(int hidden_size) {
    return CellState{Eigen::VectorXd::Zero(hidden_size), Eigen::VectorXd::Zero(hidden_size)};
}

CellState CellState::zero_gru(int hidden_size) {
    return CellState{Eigen::VectorXd::Zero(hidden_size), Eigen::VectorXd{}};
}

std::pair<CellState, double> lstm_step(const LstmParams& p, const CellState& s, double x,
                                       LstmStepCache& cache) {
    const int H = p.hidden_size();
    if (s.h.size() != H || s.C.size() != H)
        throw DomainError("LSTM state size does not match the parameters");

    cache.a = concat(s.h, x);
    cache.C_prev = s.C;
    cache.f = sigmoid(p.W_f * cache.a + p.b_f);
    cache.i = sigmoid(p.W_i * cache.a + p.b_i);
    cache.chat = (p.W_c * cache.a + p.b_c).array().tanh();
    cache.C = (cache.f.array() * s.C.array() + cache.i.array() * cache.chat.array()).matrix();
    cache.o = sigmoid(p.W_o * cache.a + p.b_o);
    cache.tanh_C = cache.C.array().tanh();
    cache.h = (cache.o.array() * cache.tanh_C.array()).matrix();
    cache.output = p.w_out.dot(cache.h) + p.b_out;

    return {CellState{cache.h, cache.C}, cache.output};
}

std::pair<CellState, double> lstm_step(const LstmParams& p, const CellState& s, double x) {
    LstmStepCache cache;
    return lstm_step(p, s, x, cache);
}

std::pair<CellState, double> gru_step(const GruParams& p, const CellState& s, double x,
                                      GruStepCache& cache) {
    const int H = p.hidden_size();
    if (s.h.size() != H)
        throw DomainError("GRU state size does not match the parameters");

    cache.a = concat(s.h, x);
    cache.h_prev = s.h;
    Eigen::VectorXd zr = p.W_r * cache.a;
    Eigen::VectorXd zz = p.W_z * cache.a;
    if (p.use_bias) {
        zr += p.b_r;
        zz += p.b_z;
    }
    cache.r = sigmoid(zr);
    cache.z = sigmoid(zz);
    cache.a2 = concat((cache.r.array() * s.h.array()).matrix(), x);
    Eigen::VectorXd zc = p.W_c * cache.a2;
    if (p.use_bias) zc += p.b_c;
    cache.hhat = zc.array().tanh();
    cache.h = ((1.0 - cache.z.array()) * s.h.array() + cache.z.array() * cache.hhat.array())
                  .matrix();
    cache.output = p.w_out.dot(cache.h) + p.b_out;

    return {CellState{cache.h, Eigen::VectorXd{}}, cache.output};
}

std::pair<CellState, double> gru_step(const GruParams& p, const CellState& s, double x) {
    GruStepCache cache;
    return gru_step(p, s, x, cache);
}

SequenceForward<LstmStepCache> forward_sequence(const LstmParams& p,
                                                std::span<const double> inputs) {
    SequenceForward<LstmStepCache> fwd;
    fwd.outputs.reserve(inputs.size());
    fwd.caches.resize(inputs.size());
    CellState s = CellState::zero_lstm(p.hidden_size());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto [next, out] = lstm_step(p, s, inputs[t], fwd.caches[t]);
        s = std::move(next);
        fwd.outputs.push_back(out);
    }
    fwd.final_state = std::move(s);
    return fwd;
}

SequenceForward<GruStepCache> forward_sequence(const GruParams& p,
                                               std::span<const double> inputs) {
    SequenceForward<GruStepCache> fwd;
    fwd.outputs.reserve(inputs.size());
    fwd.caches.resize(inputs.size());
    CellState s = CellState::zero_gru(p.hidden_size());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto [next, out] = gru_step(p, s, inputs[t], fwd.caches[t]);
        s = std::move(next);
        fwd.outputs.push_back(out);
    }
    fwd.final_state = std::move(s);
    return fwd;
}

namespace {

double summed_loss(std::span<const double> outputs, std::span<const double> targets) {
    if (outputs.size() != targets.size())
        throw DomainError("inputs and targets must have the same length");
    double loss = 0.0;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        double e = outputs[t] - targets[t];
        loss += e * e;
    }
    return loss;
}

}  // namespace

double sequence_loss(const LstmParams& p, std::span<const double> inputs,
                     std::span<const double> targets) {
    auto fwd = forward_sequence(p, inputs);
    return summed_loss(fwd.outputs, targets);
}

double sequence_loss(const GruParams& p, std::span<const double> inputs,
                     std::span<const double> targets) {
    auto fwd = forward_sequence(p, inputs);
    return summed_loss(fwd.outputs, targets);
}

LstmGradients bptt_gradients(const LstmParams& p, std::span<const double> inputs,
                             std::span<const double> targets) {
    auto fwd = forward_sequence(p, inputs);

    LstmGradients out;
    out.g = LstmParams::zeros(p.hidden_size());
    out.loss_sum = summed_loss(fwd.outputs, targets);

    const int H = p.hidden_size();
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dC_next = Eigen::VectorXd::Zero(H);

    for (std::size_t ti = inputs.size(); ti-- > 0;) {
        const LstmStepCache& c = fwd.caches[ti];

        // d loss / d output_t of the summed squared error
        double dout = 2.0 * (c.output - targets[ti]);
        out.g.w_out += dout * c.h;
        out.g.b_out += dout;

        Eigen::VectorXd dh = dh_next + dout * p.w_out;

        Eigen::VectorXd do_gate = dh.array() * c.tanh_C.array();
        Eigen::VectorXd dzo = do_gate.array() * c.o.array() * (1.0 - c.o.array());

        Eigen::VectorXd dC = dC_next.array() +
                             dh.array() * c.o.array() * (1.0 - c.tanh_C.array().square());

        Eigen::VectorXd df = dC.array() * c.C_prev.array();
        Eigen::VectorXd dzf = df.array() * c.f.array() * (1.0 - c.f.array());

        Eigen::VectorXd di = dC.array() * c.chat.array();
        Eigen::VectorXd dzi = di.array() * c.i.array() * (1.0 - c.i.array());

        Eigen::VectorXd dchat = dC.array() * c.i.array();
        Eigen::VectorXd dzc = dchat.array() * (1.0 - c.chat.array().square());

        out.g.W_f += dzf * c.a.transpose();
        out.g.W_i += dzi * c.a.transpose();
        out.g.W_c += dzc * c.a.transpose();
        out.g.W_o += dzo * c.a.transpose();
        out.g.b_f += dzf;
        out.g.b_i += dzi;
        out.g.b_c += dzc;
        out.g.b_o += dzo;

        Eigen::VectorXd da = p.W_f.transpose() * dzf + p.W_i.transpose() * dzi +
                             p.W_c.transpose() * dzc + p.W_o.transpose() * dzo;
        dh_next = da.head(H);
        dC_next = (dC.array() * c.f.array()).matrix();
    }
    return out;
}

GruGradients bptt_gradients(const GruParams& p, std::span<const double> inputs,
                            std::span<const double> targets) {
    auto fwd = forward_sequence(p, inputs);

    GruGradients out;
    out.g = GruParams::zeros(p.hidden_size(), p.use_bias);
    out.loss_sum = summed_loss(fwd.outputs, targets);

    const int H = p.hidden_size();
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);

    for (std::size_t ti = inputs.size(); ti-- > 0;) {
        const GruStepCache& c = fwd.caches[ti];

        double dout = 2.0 * (c.output - targets[ti]);
        out.g.w_out += dout * c.h;
        out.g.b_out += dout;

        Eigen::VectorXd dh = dh_next + dout * p.w_out;

        Eigen::VectorXd dz = dh.array() * (c.hhat.array() - c.h_prev.array());
        Eigen::VectorXd dzz = dz.array() * c.z.array() * (1.0 - c.z.array());

        Eigen::VectorXd dhhat = dh.array() * c.z.array();
        Eigen::VectorXd dzc = dhhat.array() * (1.0 - c.hhat.array().square());

        Eigen::VectorXd da2 = p.W_c.transpose() * dzc;
        Eigen::VectorXd dr = da2.head(H).array() * c.h_prev.array();
        Eigen::VectorXd dzr = dr.array() * c.r.array() * (1.0 - c.r.array());

        out.g.W_r += dzr * c.a.transpose();
        out.g.W_z += dzz * c.a.transpose();
        out.g.W_c += dzc * c.a2.transpose();
        if (p.use_bias) {
            out.g.b_r += dzr;
            out.g.b_z += dzz;
            out.g.b_c += dzc;
        }

        Eigen::VectorXd da = p.W_r.transpose() * dzr + p.W_z.transpose() * dzz;
        dh_next = da.head(H).array() + dh.array() * (1.0 - c.z.array()) +
                  da2.head(H).array() * c.r.array();
    }
    return out;
}

Eigen::VectorXd flatten(const LstmParams& p) {
    const auto msz = p.W_f.size();
    const auto vsz = p.b_f.size();
    Eigen::VectorXd v(4 * msz + 4 * vsz + vsz + 1);
    Eigen::Index at = 0;
    for (const auto* W : {&p.W_f, &p.W_i, &p.W_c, &p.W_o}) {
        v.segment(at, msz) = Eigen::Map<const Eigen::VectorXd>(W->data(), msz);
        at += msz;
    }
    for (const auto* b : {&p.b_f, &p.b_i, &p.b_c, &p.b_o}) {
        v.segment(at, vsz) = *b;
        at += vsz;
    }
    v.segment(at, vsz) = p.w_out;
    at += vsz;
    v(at) = p.b_out;
    return v;
}

void unflatten(const Eigen::VectorXd& v, LstmParams& p) {
    const auto msz = p.W_f.size();
    const auto vsz = p.b_f.size();
    Eigen::Index at = 0;
    for (auto* W : {&p.W_f, &p.W_i, &p.W_c, &p.W_o}) {
        Eigen::Map<Eigen::VectorXd>(W->data(), msz) = v.segment(at, msz);
        at += msz;
    }
    for (auto* b : {&p.b_f, &p.b_i, &p.b_c, &p.b_o}) {
        *b = v.segment(at, vsz);
        at += vsz;
    }
    p.w_out = v.segment(at, vsz);
    at += vsz;
    p.b_out = v(at);
}

Eigen::VectorXd flatten(const GruParams& p) {
    const auto msz = p.W_r.size();
    const auto vsz = p.b_r.size();
    Eigen::VectorXd v(3 * msz + 3 * vsz + vsz + 1);
    Eigen::Index at = 0;
    for (const auto* W : {&p.W_r, &p.W_z, &p.W_c}) {
        v.segment(at, msz) = Eigen::Map<const Eigen::VectorXd>(W->data(), msz);
        at += msz;
    }
    for (const auto* b : {&p.b_r, &p.b_z, &p.b_c}) {
        v.segment(at, vsz) = *b;
        at += vsz;
    }
    v.segment(at, vsz) = p.w_out;
    at += vsz;
    v(at) = p.b_out;
    return v;
}

void unflatten(const Eigen::VectorXd& v, GruParams& p) {
    const auto msz = p.W_r.size();
    const auto vsz = p.b_r.size();
    Eigen::Index at = 0;
    for (auto* W : {&p.W_r, &p.W_z, &p.W_c}) {
        Eigen::Map<Eigen::VectorXd>(W->data(), msz) = v.segment(at, msz);
        at += msz;
    }
    for (auto* b : {&p.b_r, &p.b_z, &p.b_c}) {
        *b = v.segment(at, vsz);
        at += vsz;
    }
    p.w_out = v.segment(at, vsz);
    at += vsz;
    p.b_out = v(at);
}

namespace {

struct Windows {
    std::vector<double> series;  // normalized
    int window = 0;

    std::size_t count() const { return series.size() - static_cast<std::size_t>(window); }
    std::span<const double> inputs(std::size_t w) const {
        return {series.data() + w, static_cast<std::size_t>(window)};
    }
    std::span<const double> targets(std::size_t w) const {
        return {series.data() + w + 1, static_cast<std::size_t>(window)};
    }
};

template <typename Params, typename Grads>
TrainedRecurrent train_cell(Params init, const Windows& win, const TrainConfig& cfg,
                            CellKind kind,
                            Grads (*grad_fn)(const Params&, std::span<const double>,
                                             std::span<const double>)) {
    const double per_step = static_cast<double>(win.count()) * cfg.window;

    auto batch_loss = [&](const Params& p) {
        double sum = 0.0;
        for (std::size_t w = 0; w < win.count(); ++w)
            sum += sequence_loss(p, win.inputs(w), win.targets(w));
        return sum / per_step;
    };

    double lr = cfg.learning_rate;
    int restarts = 0;
    while (true) {
        Params params = init;
        double initial_mse = batch_loss(params);
        double best_mse = initial_mse;
        Params best = params;
        bool exploded = false;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            Eigen::VectorXd total = Eigen::VectorXd::Zero(flatten(params).size());
            double loss_sum = 0.0;
            for (std::size_t w = 0; w < win.count(); ++w) {
                Grads g = grad_fn(params, win.inputs(w), win.targets(w));
                total += flatten(g.g);
                loss_sum += g.loss_sum;
            }
            double mse = loss_sum / per_step;
            if (!std::isfinite(mse)) {
                exploded = true;
                break;
            }
            if (mse < best_mse) {
                best_mse = mse;
                best = params;
            }

            total /= per_step;
            double norm = total.norm();
            if (norm > cfg.clip_norm) total *= cfg.clip_norm / norm;

            Eigen::VectorXd flat = flatten(params);
            flat -= lr * total;
            unflatten(flat, params);
        }

        if (!exploded) {
            // The final update is only reflected here, so give it a chance too.
            double final_mse = batch_loss(params);
            if (std::isfinite(final_mse) && final_mse < best_mse) {
                best_mse = final_mse;
                best = params;
            }
            TrainedRecurrent result;
            result.model.kind = kind;
            result.model.params = best;
            result.initial_mse = initial_mse;
            result.best_mse = best_mse;
            result.restarts = restarts;
            return result;
        }

        if (++restarts > 5)
            throw FitError("recurrent training kept exploding after 5 learning-rate halvings");
        lr *= 0.5;
    }
}

}  // namespace

TrainedRecurrent train_recurrent(const std::vector<std::uint64_t>& series,
                                 const TrainConfig& cfg, CellKind kind) {
    if (cfg.hidden_size <= 0 || cfg.window <= 0 || cfg.epochs < 0 ||
        !(cfg.learning_rate > 0.0) || !(cfg.init_scale > 0.0))
        throw DomainError("invalid recurrent train configuration");
    if (series.size() <= static_cast<std::size_t>(cfg.window))
        throw DataError("training series must be longer than the window (" +
                        std::to_string(series.size()) + " <= " + std::to_string(cfg.window) + ")");

    double lo = static_cast<double>(*std::min_element(series.begin(), series.end()));
    double hi = static_cast<double>(*std::max_element(series.begin(), series.end()));
    double range = hi > lo ? hi - lo : 1.0;

    Windows win;
    win.window = cfg.window;
    win.series.reserve(series.size());
    for (auto c : series) win.series.push_back((static_cast<double>(c) - lo) / range);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-cfg.init_scale, cfg.init_scale);

    TrainedRecurrent result;
    if (kind == CellKind::Lstm) {
        LstmParams init = LstmParams::zeros(cfg.hidden_size);
        Eigen::VectorXd flat = flatten(init);
        for (Eigen::Index k = 0; k < flat.size(); ++k) flat(k) = dist(rng);
        unflatten(flat, init);
        result = train_cell<LstmParams, LstmGradients>(std::move(init), win, cfg, kind,
                                                       &bptt_gradients);
    } else {
        GruParams init = GruParams::zeros(cfg.hidden_size, cfg.gru_bias);
        Eigen::VectorXd flat = flatten(init);
        for (Eigen::Index k = 0; k < flat.size(); ++k) flat(k) = dist(rng);
        unflatten(flat, init);
        if (!cfg.gru_bias) {
            init.b_r.setZero();
            init.b_z.setZero();
            init.b_c.setZero();
        }
        result = train_cell<GruParams, GruGradients>(std::move(init), win, cfg, kind,
                                                     &bptt_gradients);
    }
    result.model.window = cfg.window;
    result.model.norm_min = lo;
    result.model.norm_range = range;
    return result;
}

std::vector<double> forecast(const RecurrentModel& model,
                             const std::vector<std::uint64_t>& series,
                             std::size_t horizon) {
    if (horizon == 0) return {};
    if (series.size() < static_cast<std::size_t>(model.window))
        throw DataError("series shorter than the model window");

    std::vector<double> preds;
    preds.reserve(horizon);

    auto roll = [&](const auto& params) {
        constexpr bool is_lstm =
            std::is_same_v<std::decay_t<decltype(params)>, LstmParams>;
        auto step = [&](const CellState& s, double x) {
            if constexpr (is_lstm)
                return lstm_step(params, s, x);
            else
                return gru_step(params, s, x);
        };
        CellState s = is_lstm ? CellState::zero_lstm(params.hidden_size())
                              : CellState::zero_gru(params.hidden_size());
        double out = 0.0;
        for (auto c : series) {
            auto [next, o] = step(s, model.normalize(static_cast<double>(c)));
            s = std::move(next);
            out = o;
        }
        for (std::size_t k = 0; k < horizon; ++k) {
            preds.push_back(model.denormalize(out));
            auto [next, o] = step(s, out);
            s = std::move(next);
            out = o;
        }
    };
    std::visit(roll, model.params);
    return preds;
}

}  // namespace saferoute
