#pragma once

#include <string>

#include "tsim/nn/tape.hpp"

namespace tsim::nn {

/// Single LSTM cell parameters. Gate layout along the 4H axis is
/// (input, forget, candidate, output).
struct LstmParams {
  Tensor* w_ih = nullptr;  // (4H, D)
  Tensor* w_hh = nullptr;  // (4H, H)
  Tensor* b = nullptr;     // (4H)
  int input_dim = 0;
  int hidden = 0;
};

/// Uniform fan-in init; the forget-gate bias segment gets +1.
LstmParams make_lstm(ParameterSet& params, const std::string& prefix,
                     int input_dim, int hidden, Rng& rng);

/// Looks up previously created parameters by prefix.
LstmParams bind_lstm(ParameterSet& params, const std::string& prefix,
                     int input_dim, int hidden);

struct LstmState {
  ValueId h = -1;
  ValueId c = -1;
};

/// One step: returns the new state; the cell output is state.h.
LstmState lstm_cell(Tape& tape, const LstmParams& p, ValueId x,
                    const LstmState& prev);

/// Plain linear layer y = Wx + b.
struct LinearParams {
  Tensor* w = nullptr;  // (out, in)
  Tensor* b = nullptr;  // (out)
  int in = 0;
  int out = 0;
};

LinearParams make_linear(ParameterSet& params, const std::string& prefix,
                         int in, int out, Rng& rng);
LinearParams bind_linear(ParameterSet& params, const std::string& prefix,
                         int in, int out);

ValueId linear(Tape& tape, const LinearParams& p, ValueId x);

}  // namespace tsim::nn
