#pragma once

#include <cstddef>
#include <vector>

#include "deconfound/netcore/tape.hpp"

namespace dcfd::net {

enum class Activation { none, relu, softmax };

// GRU cell parameter handles: W* multiply the input x, U* multiply the
// previous hidden state h, b* are biases; z = update, r = reset, h = candidate.
struct GruCellRefs {
    NodeRef wz, uz, bz;
    NodeRef wr, ur, br;
    NodeRef wh, uh, bh;
};

// Gradient reversal: forward identity, backward multiplies the upstream
// gradient by exactly -lambda (one multiplication per element, so the
// bit-for-bit contract holds). lambda < 0 is a config error.
NodeRef grad_reverse(Tape& t, NodeRef x, const GrlConfig& cfg);

// 1-D valid convolution over time, stride 1. x: [T x Din],
// kernels: [K x Din x Dout], bias: [Dout] -> [T-K+1 x Dout].
// T < K raises the sequence-too-short data error.
NodeRef conv1d(Tape& t, NodeRef x, NodeRef kernels, NodeRef bias);

// Non-overlapping temporal max pooling; final partial window allowed.
// Ties break toward the earliest index. x: [T x D] -> [ceil(T/width) x D].
NodeRef maxpool1d(Tape& t, NodeRef x, std::size_t width);

// One GRU step with the convention
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   hcand = tanh(x Wh + (r .* h) Uh + bh)
//   h' = (1 - z) .* h + z .* hcand
// so all-zero parameters map h = v to h' = 0.5 v.
NodeRef gru_cell_step(Tape& t, NodeRef h, NodeRef x, const GruCellRefs& p);

// x[D] * W[D x E] + b[E].
NodeRef affine(Tape& t, NodeRef x, NodeRef w, NodeRef b);
NodeRef relu(Tape& t, NodeRef x);
// Numerically stable softmax; outputs are strictly positive and sum to 1
// within 1e-9.
NodeRef softmax(Tape& t, NodeRef x);
// Fully connected layer: affine followed by the requested activation.
NodeRef dense(Tape& t, NodeRef x, NodeRef w, NodeRef b, Activation act);

// loss = -class_weights[target] * ln(max(probs[target], 1e-12)). `probs`
// must lie on the simplex within 1e-9; class weights must be positive.
NodeRef weighted_cross_entropy(Tape& t, NodeRef probs, std::size_t target,
                               const Tensor& class_weights);

// Structural ops used to assemble networks and batch losses.
NodeRef concat(Tape& t, NodeRef a, NodeRef b);               // 1-D ++ 1-D
NodeRef row(Tape& t, NodeRef matrix, std::size_t r);         // [T x D] -> [D]
NodeRef stack_rows(Tape& t, const std::vector<NodeRef>& rows);  // T x [D] -> [T x D]
NodeRef add(Tape& t, NodeRef a, NodeRef b);                  // same shape
NodeRef scale(Tape& t, NodeRef x, double c);
NodeRef sum(Tape& t, NodeRef x);                             // -> scalar

}  // namespace dcfd::net
