#include "tsim/nn/lstm.hpp"

#include <array>

#include "tsim/error.hpp"

namespace tsim::nn {

LstmParams make_lstm(ParameterSet& params, const std::string& prefix,
                     int input_dim, int hidden, Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w_ih = &params.create_uniform(prefix + "/w_ih", {4 * hidden, input_dim},
                                  input_dim, rng);
  p.w_hh =
      &params.create_uniform(prefix + "/w_hh", {4 * hidden, hidden}, hidden, rng);
  p.b = &params.create_uniform(prefix + "/b", {4 * hidden}, hidden, rng);
  for (int i = hidden; i < 2 * hidden; ++i) p.b->values[i] += 1.0;
  return p;
}

LstmParams bind_lstm(ParameterSet& params, const std::string& prefix,
                     int input_dim, int hidden) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w_ih = &params.at(prefix + "/w_ih");
  p.w_hh = &params.at(prefix + "/w_hh");
  p.b = &params.at(prefix + "/b");
  return p;
}

LstmState lstm_cell(Tape& tape, const LstmParams& p, ValueId x,
                    const LstmState& prev) {
  if (tape.len(x) != p.input_dim)
    throw ContractError("lstm_cell: input dimension mismatch");
  if (tape.len(prev.h) != p.hidden || tape.len(prev.c) != p.hidden)
    throw ContractError("lstm_cell: state dimension mismatch");
  const int h = p.hidden;
  const ValueId wx = tape.matvec(tape.leaf(*p.w_ih), 4 * h, p.input_dim, x);
  const ValueId wh = tape.matvec(tape.leaf(*p.w_hh), 4 * h, h, prev.h);
  const ValueId gates = tape.add(tape.add(wx, wh), tape.leaf(*p.b));

  const ValueId gi = tape.sigmoid(tape.slice(gates, 0, h));
  const ValueId gf = tape.sigmoid(tape.slice(gates, h, h));
  const ValueId gg = tape.tanh_(tape.slice(gates, 2 * h, h));
  const ValueId go = tape.sigmoid(tape.slice(gates, 3 * h, h));

  const ValueId c_new = tape.add(tape.mul(gf, prev.c), tape.mul(gi, gg));
  const ValueId h_new = tape.mul(go, tape.tanh_(c_new));
  return {h_new, c_new};
}

LinearParams make_linear(ParameterSet& params, const std::string& prefix,
                         int in, int out, Rng& rng) {
  LinearParams p;
  p.in = in;
  p.out = out;
  p.w = &params.create_uniform(prefix + "/w", {out, in}, in, rng);
  p.b = &params.create_uniform(prefix + "/b", {out}, in, rng);
  return p;
}

LinearParams bind_linear(ParameterSet& params, const std::string& prefix,
                         int in, int out) {
  LinearParams p;
  p.in = in;
  p.out = out;
  p.w = &params.at(prefix + "/w");
  p.b = &params.at(prefix + "/b");
  return p;
}

ValueId linear(Tape& tape, const LinearParams& p, ValueId x) {
  if (tape.len(x) != p.in)
    throw ContractError("linear: input dimension mismatch");
  return tape.add(tape.matvec(tape.leaf(*p.w), p.out, p.in, x), tape.leaf(*p.b));
}

}  // namespace tsim::nn
