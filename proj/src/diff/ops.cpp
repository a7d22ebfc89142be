#include "condrnn/diff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::diff {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

Tape& tape_of(Var a, Var b) {
    if (a.tape != b.tape) throw ContractError("operands live on different tapes");
    return *a.tape;
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
}

void accumulate(Tensor* dst, const Tensor& src) {
    if (!dst) return;
    auto d = dst->data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Elementwise op whose local derivative is a function of (input, output).
template <class F, class DF>
Var unary(Var x, F f, DF df) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    Tensor saved_out = out;
    return x.tape->record(std::move(out), {x},
                          [xv, saved_out, df](const Tensor& g, std::span<Tensor* const> in) {
                              Tensor* gx = in[0];
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                  (*gx)[i] += g[i] * df(xv[i], saved_out[i]);
                              }
                          });
}

} // namespace

Var matmul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    Tensor out(Shape{m, n});
    Map(out.data().data(), m, n).noalias() = MapC(av.data().data(), m, k) * MapC(bv.data().data(), k, n);
    return tape.record(std::move(out), {a, b},
                       [av, bv, m, k, n](const Tensor& g, std::span<Tensor* const> in) {
                           MapC G(g.data().data(), m, n);
                           if (in[0]) {
                               Map(in[0]->data().data(), m, k).noalias() +=
                                   G * MapC(bv.data().data(), k, n).transpose();
                           }
                           if (in[1]) {
                               Map(in[1]->data().data(), k, n).noalias() +=
                                   MapC(av.data().data(), m, k).transpose() * G;
                           }
                       });
}

Var add(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "add");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return tape.record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
        accumulate(in[0], g);
        accumulate(in[1], g);
    });
}

Var sub(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "sub");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return tape.record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
        accumulate(in[0], g);
        if (in[1]) {
            for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "mul");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return tape.record(std::move(out), {a, b},
                       [av, bv](const Tensor& g, std::span<Tensor* const> in) {
                           if (in[0]) {
                               for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * bv[i];
                           }
                           if (in[1]) {
                               for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * av[i];
                           }
                       });
}

Var scale(Var a, double factor) {
    Tensor out = a.value();
    for (auto& v : out.data()) v *= factor;
    return a.tape->record(std::move(out), {a}, [factor](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += factor * g[i];
    });
}

Var add_row_bias(Var x, Var bias) {
    Tape& tape = tape_of(x, bias);
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    require_rank2(xv, "add_row_bias");
    const std::size_t m = xv.shape()[0], n = xv.shape()[1];
    if (bv.rank() != 1 || bv.size() != n) {
        throw DimensionError("add_row_bias: bias " + shape_string(bv.shape()) + " does not fit " +
                             shape_string(xv.shape()));
    }
    Tensor out = xv;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
    return tape.record(std::move(out), {x, bias}, [m, n](const Tensor& g, std::span<Tensor* const> in) {
        accumulate(in[0], g);
        if (in[1]) {
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < n; ++c) (*in[1])[c] += g[r * n + c];
        }
    });
}

Var leaky_relu(Var x, double slope) {
    if (!(slope > 0.0 && slope <= 1.0)) {
        throw ContractError("leaky_relu: slope must lie in (0, 1], got " + std::to_string(slope));
    }
    return unary(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var relu(Var x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
    return unary(
        x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
    return unary(
        x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var dropout(Var x, double rate, bool training, RngStream& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) return x;
    const Tensor& xv = x.value();
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask(xv.shape());
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        out[i] = xv[i] * mask[i];
    }
    return x.tape->record(std::move(out), {x}, [mask](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * mask[i];
    });
}

Var rowwise_max(Var x) {
    const Tensor& xv = x.value();
    require_rank2(xv, "rowwise_max");
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    if (n == 0) throw EmptySetError("rowwise_max over zero rows");
    Tensor out(Shape{d});
    std::vector<std::size_t> arg(d, 0);
    for (std::size_t c = 0; c < d; ++c) {
        double best = xv[c];
        for (std::size_t r = 1; r < n; ++r) {
            if (xv[r * d + c] > best) {
                best = xv[r * d + c];
                arg[c] = r;
            }
        }
        out[c] = best;
    }
    return x.tape->record(std::move(out), {x}, [arg, d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t c = 0; c < d; ++c) (*in[0])[arg[c] * d + c] += g[c];
    });
}

Var reduce_sum_rows(Var x) {
    const Tensor& xv = x.value();
    require_rank2(xv, "reduce_sum_rows");
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    Tensor out(Shape{d});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out[c] += xv[r * d + c];
    return x.tape->record(std::move(out), {x}, [n, d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) (*in[0])[r * d + c] += g[c];
    });
}

Var segment_sum_rows(Var x, std::span<const std::size_t> segment, std::size_t n_segments) {
    const Tensor& xv = x.value();
    require_rank2(xv, "segment_sum_rows");
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    if (segment.size() != n) throw DimensionError("segment_sum_rows: one segment id per row required");
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    Tensor out(Shape{n_segments, d});
    for (std::size_t r = 0; r < n; ++r) {
        if (seg[r] >= n_segments) throw DimensionError("segment_sum_rows: segment id out of range");
        for (std::size_t c = 0; c < d; ++c) out[seg[r] * d + c] += xv[r * d + c];
    }
    return x.tape->record(std::move(out), {x}, [seg, d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < seg.size(); ++r)
            for (std::size_t c = 0; c < d; ++c) (*in[0])[r * d + c] += g[seg[r] * d + c];
    });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
    const Tensor& xv = x.value();
    require_rank2(xv, "gather_rows");
    const std::size_t n = xv.shape()[0], d = xv.shape()[1];
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    Tensor out(Shape{idx.size(), d});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= n) throw DimensionError("gather_rows: row index out of range");
        std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    return x.tape->record(std::move(out), {x}, [idx, d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < d; ++c) (*in[0])[idx[r] * d + c] += g[r * d + c];
    });
}

Var tile_rows(Var v, std::size_t n) {
    const Tensor& vv = v.value();
    if (vv.rank() != 1) throw DimensionError("tile_rows: expected a vector, got " + shape_string(vv.shape()));
    const std::size_t d = vv.size();
    Tensor out(Shape{n, d});
    for (std::size_t r = 0; r < n; ++r) std::copy(vv.data().begin(), vv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
    return v.tape->record(std::move(out), {v}, [n, d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) (*in[0])[c] += g[r * d + c];
    });
}

Var concat(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool ok = av.rank() == bv.rank() && av.rank() >= 1 && av.rank() <= 2 &&
                    (av.rank() == 1 || av.shape()[0] == bv.shape()[0]);
    if (!ok) {
        throw DimensionError("concat: incompatible shapes " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    const std::size_t rows = av.rank() == 2 ? av.shape()[0] : 1;
    const std::size_t p = av.cols(), q = bv.cols();
    Shape shape = av.shape();
    shape.back() = p + q;
    Tensor out(shape);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(av.data().begin() + static_cast<std::ptrdiff_t>(r * p), p,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * (p + q)));
        std::copy_n(bv.data().begin() + static_cast<std::ptrdiff_t>(r * q), q,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * (p + q) + p));
    }
    return tape.record(std::move(out), {a, b}, [rows, p, q](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < rows; ++r) {
            if (in[0])
                for (std::size_t c = 0; c < p; ++c) (*in[0])[r * p + c] += g[r * (p + q) + c];
            if (in[1])
                for (std::size_t c = 0; c < q; ++c) (*in[1])[r * q + c] += g[r * (p + q) + p + c];
        }
    });
}

Var reshape(Var x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return x.tape->record(std::move(out), {x}, [](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
    });
}

Var softmax(Var x) {
    const Tensor& xv = x.value();
    if (xv.rank() != 1 && xv.rank() != 2) {
        throw DimensionError("softmax: expected rank 1 or 2, got " + shape_string(xv.shape()));
    }
    const std::size_t k = xv.cols();
    const std::size_t rows = k ? xv.size() / k : 0;
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data().data() + r * k;
        double* o = out.data().data() + r * k;
        double mx = *std::max_element(in, in + k);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            o[c] = std::exp(in[c] - mx);
            z += o[c];
        }
        for (std::size_t c = 0; c < k; ++c) o[c] /= z;
    }
    Tensor y = out;
    return x.tape->record(std::move(out), {x}, [y, rows, k](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < k; ++c) dot += g[r * k + c] * y[r * k + c];
            for (std::size_t c = 0; c < k; ++c) (*in[0])[r * k + c] += y[r * k + c] * (g[r * k + c] - dot);
        }
    });
}

Var sum(Var x) {
    const Tensor& xv = x.value();
    double s = 0.0;
    for (double v : xv.data()) s += v;
    return x.tape->record(Tensor::scalar(s), {x}, [](const Tensor& g, std::span<Tensor* const> in) {
        const double gv = g[0];
        for (auto& v : in[0]->data()) v += gv;
    });
}

Var mean(Var x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw EmptySetError("mean of an empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

} // namespace condrnn::diff
