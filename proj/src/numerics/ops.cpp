#include "factorcast/numerics/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>

namespace factorcast::num {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMajor>;
using ConstMapMat = Eigen::Map<const RowMajor>;

Tape& tape_of(Var a) {
    if (!a.valid()) throw std::invalid_argument("operation on an empty Var");
    return *a.tape();
}

void require_same(const char* op, Var a, Var b) {
    if (!(a.shape() == b.shape())) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    }
}

void require_rank(const char* op, Var a, std::size_t rank) {
    if (a.shape().rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + a.shape().str());
    }
}

Shape with_dim(const Shape& s, std::size_t axis, std::size_t value) {
    std::array<std::size_t, 3> d{};
    for (std::size_t i = 0; i < s.rank(); ++i) d[i] = s[i];
    d[axis] = value;
    switch (s.rank()) {
        case 1: return Shape{d[0]};
        case 2: return Shape{d[0], d[1]};
        default: return Shape{d[0], d[1], d[2]};
    }
}

// Splits a shape around an axis: outer * dim * inner == numel.
struct AxisSplit {
    std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.dim = s[axis];
    for (std::size_t i = axis + 1; i < s.rank(); ++i) r.inner *= s[i];
    return r;
}

template <class F, class DF>
Var unary(Op op, Var a, F f, DF df) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
    const int ia = a.id();
    return t.record(op, std::move(y), {a}, [ia, df](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const auto& xs = tp.value(ia).data;
        const auto& ys = tp.value(self).data;
        const auto& gy = tp.grad(self).data;
        auto& gx = tp.grad(ia).data;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(xs[i], ys[i]);
    });
}

void accumulate(Tape& tp, int id, const std::vector<double>& g, double sign = 1.0) {
    if (!tp.needs_grad(id)) return;
    auto& dst = tp.grad(id).data;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sign * g[i];
}

}  // namespace

Var add(Var a, Var b) {
    require_same("add", a, b);
    Tensor y = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv[i];
    const int ia = a.id(), ib = b.id();
    return tape_of(a).record(Op::Add, std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
        const auto& g = tp.grad(self).data;
        accumulate(tp, ia, g);
        accumulate(tp, ib, g);
    });
}

Var sub(Var a, Var b) {
    require_same("sub", a, b);
    Tensor y = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= bv[i];
    const int ia = a.id(), ib = b.id();
    return tape_of(a).record(Op::Sub, std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
        const auto& g = tp.grad(self).data;
        accumulate(tp, ia, g);
        accumulate(tp, ib, g, -1.0);
    });
}

Var mul(Var a, Var b) {
    require_same("mul", a, b);
    Tensor y = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= bv[i];
    const int ia = a.id(), ib = b.id();
    return tape_of(a).record(Op::Mul, std::move(y), {a, b}, [ia, ib](Tape& tp, int self) {
        const auto& g = tp.grad(self).data;
        if (tp.needs_grad(ia)) {
            const auto& bv2 = tp.value(ib).data;
            auto& ga = tp.grad(ia).data;
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (tp.needs_grad(ib)) {
            const auto& av = tp.value(ia).data;
            auto& gb = tp.grad(ib).data;
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(Var a, double c) {
    Tensor y = a.value();
    for (double& v : y.data) v *= c;
    const int ia = a.id();
    return tape_of(a).record(Op::Scale, std::move(y), {a}, [ia, c](Tape& tp, int self) {
        accumulate(tp, ia, tp.grad(self).data, c);
    });
}

Var add_scalar(Var a, double c) {
    Tensor y = a.value();
    for (double& v : y.data) v += c;
    const int ia = a.id();
    return tape_of(a).record(Op::AddScalar, std::move(y), {a}, [ia](Tape& tp, int self) {
        accumulate(tp, ia, tp.grad(self).data);
    });
}

Var matmul(Var a, Var b) {
    require_rank("matmul", a, 2);
    require_rank("matmul", b, 2);
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError("matmul: inner dimensions differ " + a.shape().str() + " x " +
                         b.shape().str());
    }
    Tensor y(Shape{m, n});
    MapMat(y.data.data(), m, n).noalias() =
        ConstMapMat(a.value().data.data(), m, k) * ConstMapMat(b.value().data.data(), k, n);
    const int ia = a.id(), ib = b.id();
    return tape_of(a).record(Op::MatMul, std::move(y), {a, b}, [ia, ib, m, k, n](Tape& tp, int self) {
        ConstMapMat g(tp.grad(self).data.data(), m, n);
        if (tp.needs_grad(ia)) {
            MapMat(tp.grad(ia).data.data(), m, k).noalias() +=
                g * ConstMapMat(tp.value(ib).data.data(), k, n).transpose();
        }
        if (tp.needs_grad(ib)) {
            MapMat(tp.grad(ib).data.data(), k, n).noalias() +=
                ConstMapMat(tp.value(ia).data.data(), m, k).transpose() * g;
        }
    });
}

Var affine(Var x, Var w, Var b) {
    require_rank("affine", x, 2);
    require_rank("affine", w, 2);
    require_rank("affine", b, 1);
    const std::size_t n = x.shape()[0], in = x.shape()[1], out = w.shape()[1];
    if (w.shape()[0] != in || b.shape()[0] != out) {
        throw ShapeError("affine: incompatible shapes x" + x.shape().str() + " w" +
                         w.shape().str() + " b" + b.shape().str());
    }
    Tensor y(Shape{n, out});
    MapMat ym(y.data.data(), n, out);
    ym.noalias() =
        ConstMapMat(x.value().data.data(), n, in) * ConstMapMat(w.value().data.data(), in, out);
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.value().data.data(), out);
    const int ix = x.id(), iw = w.id(), ib = b.id();
    return tape_of(x).record(
        Op::Affine, std::move(y), {x, w, b}, [ix, iw, ib, n, in, out](Tape& tp, int self) {
            ConstMapMat g(tp.grad(self).data.data(), n, out);
            if (tp.needs_grad(ix)) {
                MapMat(tp.grad(ix).data.data(), n, in).noalias() +=
                    g * ConstMapMat(tp.value(iw).data.data(), in, out).transpose();
            }
            if (tp.needs_grad(iw)) {
                MapMat(tp.grad(iw).data.data(), in, out).noalias() +=
                    ConstMapMat(tp.value(ix).data.data(), n, in).transpose() * g;
            }
            if (tp.needs_grad(ib)) {
                Eigen::Map<Eigen::RowVectorXd>(tp.grad(ib).data.data(), out) += g.colwise().sum();
            }
        });
}

Var conv1d(Var x, Var w, Var b, std::size_t dilation) {
    require_rank("conv1d", x, 3);
    require_rank("conv1d", w, 3);
    if (dilation == 0) throw std::invalid_argument("conv1d: dilation must be positive");
    const std::size_t batch = x.shape()[0], cin = x.shape()[1], len = x.shape()[2];
    const std::size_t cout = w.shape()[0], k = w.shape()[2];
    if (w.shape()[1] != cin) {
        throw ShapeError("conv1d: weight " + w.shape().str() + " does not match input channels of " +
                         x.shape().str());
    }
    const bool has_bias = b.valid();
    if (has_bias && !(b.shape() == Shape{cout})) {
        throw ShapeError("conv1d: bias " + b.shape().str() + " does not match " +
                         std::to_string(cout) + " output channels");
    }
    Tensor y(Shape{batch, cout, len});
    const auto& xv = x.value().data;
    const auto& wv = w.value().data;
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t o = 0; o < cout; ++o) {
            double* yr = &y.data[(bi * cout + o) * len];
            if (has_bias) std::fill(yr, yr + len, b.value().data[o]);
            for (std::size_t c = 0; c < cin; ++c) {
                const double* xr = &xv[(bi * cin + c) * len];
                for (std::size_t j = 0; j < k; ++j) {
                    const std::size_t shift = (k - 1 - j) * dilation;
                    if (shift >= len) continue;
                    const double wt = wv[(o * cin + c) * k + j];
                    for (std::size_t t = shift; t < len; ++t) yr[t] += wt * xr[t - shift];
                }
            }
        }
    }
    const int ix = x.id(), iw = w.id(), ib = has_bias ? b.id() : -1;
    std::vector<Var> parents{x, w};
    if (has_bias) parents.push_back(b);
    return tape_of(x).record(
        Op::Conv1d, std::move(y), parents,
        [ix, iw, ib, batch, cin, len, cout, k, dilation](Tape& tp, int self) {
            const auto& g = tp.grad(self).data;
            const auto& xv2 = tp.value(ix).data;
            const auto& wv2 = tp.value(iw).data;
            const bool gx_on = tp.needs_grad(ix), gw_on = tp.needs_grad(iw);
            double* gx = gx_on ? tp.grad(ix).data.data() : nullptr;
            double* gw = gw_on ? tp.grad(iw).data.data() : nullptr;
            for (std::size_t bi = 0; bi < batch; ++bi) {
                for (std::size_t o = 0; o < cout; ++o) {
                    const double* gr = &g[(bi * cout + o) * len];
                    for (std::size_t c = 0; c < cin; ++c) {
                        const double* xr = &xv2[(bi * cin + c) * len];
                        for (std::size_t j = 0; j < k; ++j) {
                            const std::size_t shift = (k - 1 - j) * dilation;
                            if (shift >= len) continue;
                            const std::size_t wi = (o * cin + c) * k + j;
                            if (gw_on) {
                                double acc = 0.0;
                                for (std::size_t t = shift; t < len; ++t) acc += gr[t] * xr[t - shift];
                                gw[wi] += acc;
                            }
                            if (gx_on) {
                                double* gxr = gx + (bi * cin + c) * len;
                                const double wt = wv2[wi];
                                for (std::size_t t = shift; t < len; ++t) gxr[t - shift] += wt * gr[t];
                            }
                        }
                    }
                }
            }
            if (ib >= 0 && tp.needs_grad(ib)) {
                auto& gb = tp.grad(ib).data;
                for (std::size_t bi = 0; bi < batch; ++bi)
                    for (std::size_t o = 0; o < cout; ++o) {
                        const double* gr = &g[(bi * cout + o) * len];
                        gb[o] += std::accumulate(gr, gr + len, 0.0);
                    }
            }
        });
}

Var tanh(Var a) {
    return unary(Op::Tanh, a, [](double v) { return std::tanh(v); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary(
        Op::Sigmoid, a,
        [](double v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return unary(Op::Exp, a, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var a) {
    return unary(Op::Log, a, [](double v) { return std::log(v); },
                 [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
    return unary(Op::Sqrt, a, [](double v) { return std::sqrt(v); },
                 [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var neg(Var a) {
    return unary(Op::Neg, a, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var relu(Var a) {
    return unary(Op::Relu, a, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(Var a) {
    return unary(Op::Square, a, [](double v) { return v * v; },
                 [](double x, double) { return 2.0 * x; });
}

Var softmax(Var a) {
    const Shape& s = a.shape();
    if (s.rank() != 1 && s.rank() != 2) {
        throw ShapeError("softmax: expected rank 1 or 2, got " + s.str());
    }
    const std::size_t width = s[s.rank() - 1];
    if (width == 0) throw ShapeError("softmax over an empty axis");
    const std::size_t rows = s.numel() / width;
    Tensor y(s);
    const auto& x = a.value().data;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = &x[r * width];
        double* yr = &y.data[r * width];
        const double mx = *std::max_element(xr, xr + width);
        double z = 0.0;
        for (std::size_t i = 0; i < width; ++i) z += (yr[i] = std::exp(xr[i] - mx));
        for (std::size_t i = 0; i < width; ++i) yr[i] /= z;
    }
    const int ia = a.id();
    return tape_of(a).record(Op::Softmax, std::move(y), {a}, [ia, rows, width](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const auto& yv = tp.value(self).data;
        const auto& g = tp.grad(self).data;
        auto& gx = tp.grad(ia).data;
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t i = 0; i < width; ++i) dot += g[r * width + i] * yv[r * width + i];
            for (std::size_t i = 0; i < width; ++i)
                gx[r * width + i] += yv[r * width + i] * (g[r * width + i] - dot);
        }
    });
}

Var sum(Var a) {
    const auto& x = a.value().data;
    Tensor y = Tensor::scalar(std::accumulate(x.begin(), x.end(), 0.0));
    const int ia = a.id();
    return tape_of(a).record(Op::Sum, std::move(y), {a}, [ia](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const double g = tp.grad(self).data[0];
        for (double& v : tp.grad(ia).data) v += g;
    });
}

Var mean(Var a) {
    const auto& x = a.value().data;
    if (x.empty()) throw ShapeError("mean of an empty array");
    const double n = static_cast<double>(x.size());
    Tensor y = Tensor::scalar(std::accumulate(x.begin(), x.end(), 0.0) / n);
    const int ia = a.id();
    return tape_of(a).record(Op::Mean, std::move(y), {a}, [ia, n](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const double g = tp.grad(self).data[0] / n;
        for (double& v : tp.grad(ia).data) v += g;
    });
}

Var frobenius(Var a) {
    const auto& x = a.value().data;
    double ss = 0.0;
    for (double v : x) ss += v * v;
    Tensor y = Tensor::scalar(std::sqrt(ss));
    const int ia = a.id();
    return tape_of(a).record(Op::Frobenius, std::move(y), {a}, [ia](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const double norm = tp.value(self).data[0];
        if (norm == 0.0) return;
        const double g = tp.grad(self).data[0] / norm;
        const auto& xv = tp.value(ia).data;
        auto& gx = tp.grad(ia).data;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * xv[i];
    });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat of zero parts");
    const Shape& s0 = parts[0].shape();
    if (axis >= s0.rank()) throw ShapeError("concat: axis out of range for " + s0.str());
    std::size_t total = 0;
    for (const Var& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.rank() == s0.rank();
        for (std::size_t i = 0; ok && i < s.rank(); ++i) ok = (i == axis) || s[i] == s0[i];
        if (!ok) throw ShapeError("concat: incompatible parts " + s0.str() + " and " + s.str());
        total += s[axis];
    }
    const Shape out_shape = with_dim(s0, axis, total);
    const AxisSplit os = split_at(out_shape, axis);
    Tensor y(out_shape);
    std::vector<int> ids;
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        const std::size_t d = p.shape()[axis];
        const auto& v = p.value().data;
        for (std::size_t o = 0; o < os.outer; ++o)
            std::copy_n(&v[o * d * os.inner], d * os.inner,
                        &y.data[(o * os.dim + off) * os.inner]);
        ids.push_back(p.id());
        offsets.push_back(off);
        off += d;
    }
    return tape_of(parts[0]).record(
        Op::Concat, std::move(y), parts, [ids, offsets, os](Tape& tp, int self) {
            const auto& g = tp.grad(self).data;
            for (std::size_t pi = 0; pi < ids.size(); ++pi) {
                if (!tp.needs_grad(ids[pi])) continue;
                auto& gp = tp.grad(ids[pi]).data;
                const std::size_t d = gp.size() / (os.outer * os.inner);
                for (std::size_t o = 0; o < os.outer; ++o)
                    for (std::size_t i = 0; i < d * os.inner; ++i)
                        gp[o * d * os.inner + i] += g[(o * os.dim + offsets[pi]) * os.inner + i];
            }
        });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = a.shape();
    if (axis >= s.rank() || begin > end || end > s[axis]) {
        throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + s.str());
    }
    const AxisSplit is = split_at(s, axis);
    const std::size_t d = end - begin;
    Tensor y(with_dim(s, axis, d));
    const auto& x = a.value().data;
    for (std::size_t o = 0; o < is.outer; ++o)
        std::copy_n(&x[(o * is.dim + begin) * is.inner], d * is.inner, &y.data[o * d * is.inner]);
    const int ia = a.id();
    return tape_of(a).record(Op::Slice, std::move(y), {a}, [ia, is, begin, d](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const auto& g = tp.grad(self).data;
        auto& gx = tp.grad(ia).data;
        for (std::size_t o = 0; o < is.outer; ++o)
            for (std::size_t i = 0; i < d * is.inner; ++i)
                gx[(o * is.dim + begin) * is.inner + i] += g[o * d * is.inner + i];
    });
}

Var reshape(Var a, Shape shape) {
    if (shape.numel() != a.shape().numel()) {
        throw ShapeError("reshape " + a.shape().str() + " -> " + shape.str());
    }
    Tensor y(shape, a.value().data);
    const int ia = a.id();
    return tape_of(a).record(Op::Reshape, std::move(y), {a}, [ia](Tape& tp, int self) {
        accumulate(tp, ia, tp.grad(self).data);
    });
}

Var permute(Var a, std::array<std::size_t, 3> order) {
    require_rank("permute", a, 3);
    const Shape& s = a.shape();
    std::array<bool, 3> seen{};
    for (std::size_t o : order) {
        if (o > 2 || seen[o]) throw ShapeError("permute: invalid axis order");
        seen[o] = true;
    }
    const std::array<std::size_t, 3> in{s[0], s[1], s[2]};
    const std::array<std::size_t, 3> out{in[order[0]], in[order[1]], in[order[2]]};
    const std::array<std::size_t, 3> in_stride{in[1] * in[2], in[2], 1};
    // Stride into the source for each output axis.
    const std::array<std::size_t, 3> st{in_stride[order[0]], in_stride[order[1]], in_stride[order[2]]};
    Tensor y(Shape{out[0], out[1], out[2]});
    const auto& x = a.value().data;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < out[0]; ++i)
        for (std::size_t j = 0; j < out[1]; ++j)
            for (std::size_t k = 0; k < out[2]; ++k) y.data[idx++] = x[i * st[0] + j * st[1] + k * st[2]];
    const int ia = a.id();
    return tape_of(a).record(Op::Permute, std::move(y), {a}, [ia, out, st](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const auto& g = tp.grad(self).data;
        auto& gx = tp.grad(ia).data;
        std::size_t idx2 = 0;
        for (std::size_t i = 0; i < out[0]; ++i)
            for (std::size_t j = 0; j < out[1]; ++j)
                for (std::size_t k = 0; k < out[2]; ++k) gx[i * st[0] + j * st[1] + k * st[2]] += g[idx2++];
    });
}

Var transpose(Var a) {
    require_rank("transpose", a, 2);
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    return reshape(permute(reshape(a, Shape{1, r, c}), {0, 2, 1}), Shape{c, r});
}

Var take_columns(Var x, std::span<const long> columns) {
    require_rank("take_columns", x, 3);
    const std::size_t batch = x.shape()[0], ch = x.shape()[1], len = x.shape()[2];
    const std::size_t n = columns.size();
    for (long c : columns) {
        if (c >= static_cast<long>(len)) {
            throw ShapeError("take_columns: column " + std::to_string(c) + " out of range for " +
                             x.shape().str());
        }
    }
    Tensor y(Shape{batch * n, ch});
    const auto& xv = x.value().data;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t m = 0; m < n; ++m) {
            if (columns[m] < 0) continue;
            const auto t = static_cast<std::size_t>(columns[m]);
            double* row = &y.data[(b * n + m) * ch];
            for (std::size_t c = 0; c < ch; ++c) row[c] = xv[(b * ch + c) * len + t];
        }
    const int ix = x.id();
    std::vector<long> cols(columns.begin(), columns.end());
    return tape_of(x).record(Op::TakeColumns, std::move(y), {x},
                             [ix, cols, batch, ch, len](Tape& tp, int self) {
                                 if (!tp.needs_grad(ix)) return;
                                 const auto& g = tp.grad(self).data;
                                 auto& gx = tp.grad(ix).data;
                                 const std::size_t n2 = cols.size();
                                 for (std::size_t b = 0; b < batch; ++b)
                                     for (std::size_t m = 0; m < n2; ++m) {
                                         if (cols[m] < 0) continue;
                                         const auto t = static_cast<std::size_t>(cols[m]);
                                         const double* row = &g[(b * n2 + m) * ch];
                                         for (std::size_t c = 0; c < ch; ++c)
                                             gx[(b * ch + c) * len + t] += row[c];
                                     }
                             });
}

Var scale_per_sample(Var a, Var s) {
    const Shape& sa = a.shape();
    if (sa.rank() < 1 || !(s.shape() == Shape{sa[0]})) {
        throw ShapeError("scale_per_sample: " + sa.str() + " by " + s.shape().str());
    }
    const std::size_t batch = sa[0], stride = sa.numel() / std::max<std::size_t>(batch, 1);
    Tensor y = a.value();
    const auto& sv = s.value().data;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < stride; ++i) y.data[b * stride + i] *= sv[b];
    const int ia = a.id(), is = s.id();
    return tape_of(a).record(Op::ScalePerSample, std::move(y), {a, s},
                             [ia, is, batch, stride](Tape& tp, int self) {
                                 const auto& g = tp.grad(self).data;
                                 const auto& sv2 = tp.value(is).data;
                                 const auto& av = tp.value(ia).data;
                                 if (tp.needs_grad(ia)) {
                                     auto& ga = tp.grad(ia).data;
                                     for (std::size_t b = 0; b < batch; ++b)
                                         for (std::size_t i = 0; i < stride; ++i)
                                             ga[b * stride + i] += g[b * stride + i] * sv2[b];
                                 }
                                 if (tp.needs_grad(is)) {
                                     auto& gs = tp.grad(is).data;
                                     for (std::size_t b = 0; b < batch; ++b) {
                                         double acc = 0.0;
                                         for (std::size_t i = 0; i < stride; ++i)
                                             acc += g[b * stride + i] * av[b * stride + i];
                                         gs[b] += acc;
                                     }
                                 }
                             });
}

Var sum_per_sample(Var a) {
    const Shape& sa = a.shape();
    if (sa.rank() < 1) throw ShapeError("sum_per_sample on a scalar");
    const std::size_t batch = sa[0], stride = sa.numel() / std::max<std::size_t>(batch, 1);
    Tensor y(Shape{batch});
    const auto& x = a.value().data;
    for (std::size_t b = 0; b < batch; ++b)
        y.data[b] = std::accumulate(&x[b * stride], &x[b * stride] + stride, 0.0);
    const int ia = a.id();
    return tape_of(a).record(Op::SumPerSample, std::move(y), {a}, [ia, batch, stride](Tape& tp, int self) {
        if (!tp.needs_grad(ia)) return;
        const auto& g = tp.grad(self).data;
        auto& gx = tp.grad(ia).data;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < stride; ++i) gx[b * stride + i] += g[b];
    });
}

Var mse(Var a, Var b) { return mean(square(sub(a, b))); }

}  // namespace factorcast::num
