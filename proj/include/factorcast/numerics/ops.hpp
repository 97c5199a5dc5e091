#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "factorcast/numerics/tape.hpp"

// Differentiable primitives. Every function records one node on the tape that owns
// its first operand and returns a handle to it.
//
// Shape rules:
//   add/sub/mul            identical shapes
//   matmul                 [m,k] x [k,n] -> [m,n]
//   affine(x, w, b)        [n,in] x [in,out] + [out] -> [n,out]
//   conv1d(x, w, b, d)     [B,Cin,T] with w [Cout,Cin,k], b [Cout] -> [B,Cout,T];
//                          causal zero padding of (k-1)*d on the left
//   softmax                over the last axis of a rank-1 or rank-2 array
//   sum/mean/frobenius     any shape -> scalar
//   concat/slice           along one axis; other axes must agree
//   take_columns(x, idx)   [B,C,T] -> [B*n,C], row b*n+m holds x[b,:,idx[m]];
//                          idx[m] < 0 yields a zero row
//   scale_per_sample       [B,...] * [B] -> [B,...]
//   sum_per_sample         [B,...] -> [B]
namespace factorcast::num {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var matmul(Var a, Var b);
Var affine(Var x, Var w, Var b);
Var conv1d(Var x, Var w, Var b, std::size_t dilation);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
/// Derivative at exactly zero is taken as zero.
Var sqrt(Var a);
Var neg(Var a);
Var relu(Var a);
Var square(Var a);

Var softmax(Var a);
Var sum(Var a);
Var mean(Var a);
Var frobenius(Var a);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);
Var permute(Var a, std::array<std::size_t, 3> order);
Var transpose(Var a);
Var take_columns(Var x, std::span<const long> columns);
Var scale_per_sample(Var a, Var s);
Var sum_per_sample(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }

/// Mean squared difference over all entries.
Var mse(Var a, Var b);

}  // namespace factorcast::num
