#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace saferoute {

// Both cells read a scalar input per time step (the normalized count) and
// emit a scalar through a linear readout of the hidden state.

struct LstmParams {
    // Gate weights over the concatenated [h_{t-1}, x_t], H x (H+1).
    Eigen::MatrixXd W_f, W_i, W_c, W_o;
    Eigen::VectorXd b_f, b_i, b_c, b_o;
    Eigen::VectorXd w_out;  // hidden -> scalar readout
    double b_out = 0.0;

    int hidden_size() const { return static_cast<int>(b_f.size()); }
    static LstmParams zeros(int hidden_size);
};

struct GruParams {
    Eigen::MatrixXd W_r, W_z, W_c;  // reset, update, candidate; H x (H+1)
    Eigen::VectorXd b_r, b_z, b_c;
    Eigen::VectorXd w_out;
    double b_out = 0.0;
    // Bias-free mode drops the bias terms entirely (some formulations of the
    // gate equations carry none); biases then stay zero with zero gradients.
    bool use_bias = true;

    int hidden_size() const { return static_cast<int>(b_r.size()); }
    static GruParams zeros(int hidden_size, bool use_bias = true);
};

// h is the short-term memory; C the long-term cell memory (LSTM only, kept
// empty for GRU).
struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd C;

    static CellState zero_lstm(int hidden_size);
    static CellState zero_gru(int hidden_size);
};

// Activations cached by one forward step, enough to run BPTT and to assert
// the gate-range invariants.
struct LstmStepCache {
    Eigen::VectorXd a;  // [h_prev; x]
    Eigen::VectorXd f, i, chat, o;
    Eigen::VectorXd C_prev, C, tanh_C, h;
    double output = 0.0;
};

struct GruStepCache {
    Eigen::VectorXd a;   // [h_prev; x]
    Eigen::VectorXd a2;  // [r .* h_prev; x]
    Eigen::VectorXd r, z, hhat;
    Eigen::VectorXd h_prev, h;
    double output = 0.0;
};

// One LSTM step:
//   f,i = sigmoid(W_{f,i} a + b),  chat = tanh(W_c a + b_c)
//   C_t = f .* C_{t-1} + i .* chat
//   o = sigmoid(W_o a + b_o),  h_t = o .* tanh(C_t)
//   output = w_out . h_t + b_out
std::pair<CellState, double> lstm_step(const LstmParams& p, const CellState& s, double x);
std::pair<CellState, double> lstm_step(const LstmParams& p, const CellState& s, double x,
                                       LstmStepCache& cache);

// One GRU step:
//   r,z = sigmoid(W_{r,z} a [+ b]),  hhat = tanh(W_c [r .* h_{t-1}; x] [+ b])
//   h_t = (1 - z) .* h_{t-1} + z .* hhat
std::pair<CellState, double> gru_step(const GruParams& p, const CellState& s, double x);
std::pair<CellState, double> gru_step(const GruParams& p, const CellState& s, double x,
                                      GruStepCache& cache);

template <typename Cache>
struct SequenceForward {
    std::vector<double> outputs;
    std::vector<Cache> caches;
    CellState final_state;
};

// Runs the cell over the inputs from the zero initial state, caching every
// activation for BPTT.
SequenceForward<LstmStepCache> forward_sequence(const LstmParams& p,
                                                std::span<const double> inputs);
SequenceForward<GruStepCache> forward_sequence(const GruParams& p,
                                               std::span<const double> inputs);

// Summed squared error of the one-step-ahead outputs against targets.
double sequence_loss(const LstmParams& p, std::span<const double> inputs,
                     std::span<const double> targets);
double sequence_loss(const GruParams& p, std::span<const double> inputs,
                     std::span<const double> targets);

// Exact reverse-mode gradients of sequence_loss with respect to every
// parameter. Gradients come back in a parameter-shaped struct; loss_sum is
// the forward value. Gradients over a batch of windows add.
struct LstmGradients {
    LstmParams g;  // same shapes as the parameters
    double loss_sum = 0.0;
};
struct GruGradients {
    GruParams g;
    double loss_sum = 0.0;
};

LstmGradients bptt_gradients(const LstmParams& p, std::span<const double> inputs,
                             std::span<const double> targets);
GruGradients bptt_gradients(const GruParams& p, std::span<const double> inputs,
                            std::span<const double> targets);

// Flat views used by the trainer, the gradient clip, serialization and the
// finite-difference checks. Order is fixed.
Eigen::VectorXd flatten(const LstmParams& p);
Eigen::VectorXd flatten(const GruParams& p);
void unflatten(const Eigen::VectorXd& v, LstmParams& p);
void unflatten(const Eigen::VectorXd& v, GruParams& p);

enum class CellKind { Lstm, Gru };

struct TrainConfig {
    int hidden_size = 8;
    int window = 4;
    int epochs = 3000;
    double learning_rate = 0.05;
    std::uint64_t seed = 42;
    double init_scale = 0.2;
    bool gru_bias = true;
    double clip_norm = 5.0;
};

// A trained forecaster: cell parameters plus the min-max normalization of the
// training series (range 1 is stored for constant series).
struct RecurrentModel {
    CellKind kind = CellKind::Lstm;
    std::variant<LstmParams, GruParams> params;
    int window = 4;
    double norm_min = 0.0;
    double norm_range = 1.0;

    double normalize(double count) const { return (count - norm_min) / norm_range; }
    double denormalize(double v) const { return v * norm_range + norm_min; }
};

struct TrainedRecurrent {
    RecurrentModel model;
    double initial_mse = 0.0;
    double best_mse = 0.0;
    int restarts = 0;
};

// Full-batch gradient descent over all sliding windows of the series.
// Weights start uniform in [-init_scale, init_scale] drawn from cfg.seed, so a
// fixed seed reproduces the run bit for bit. Keeps the best-loss parameters
// seen; a non-finite loss halves the learning rate and restarts from the same
// initialization, at most 5 times (then FitError).
// The series must be longer than cfg.window.
TrainedRecurrent train_recurrent(const std::vector<std::uint64_t>& series,
                                 const TrainConfig& cfg, CellKind kind);

// Rolls the model forward over the series (normalized with the model's stored
// bounds), then feeds its own predictions for `horizon` steps. Returns
// de-normalized count-scale forecasts; horizon 0 gives an empty list.
std::vector<double> forecast(const RecurrentModel& model,
                             const std::vector<std::uint64_t>& series,
                             std::size_t horizon);

}  // namespace saferoute
