// ibasr/numerics/ops.cc

#include "ibasr/numerics/ops.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ibasr/errors.h"

namespace ibasr {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

Graph& same_graph(Var a, Var b) {
  if (a.graph == nullptr || a.graph != b.graph) {
    throw ContractError("operands belong to different graphs");
  }
  return *a.graph;
}

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

// Applies f pointwise; backward multiplies by df(x, y).
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Graph& g = *a.graph;
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id;
  const std::size_t io = g.size();  // id of the node recorded below
  return g.record(
      std::move(y),
      [ia, io, df](Graph& gr, const Tensor& go) {
        const Tensor& xv = gr.value(ia);
        const Tensor& yv = gr.value(io);
        Tensor& ga = gr.grad_buffer(ia);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga[i] += go[i] * df(xv[i], yv[i]);
        }
      });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Tensor c({av.rows(), bv.cols()});
  as_matrix(c).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
    const auto gm = as_matrix(go);
    as_matrix(gr.grad_buffer(ia)).noalias() +=
        gm * as_matrix(gr.value(ib)).transpose();
    as_matrix(gr.grad_buffer(ib)).noalias() +=
        as_matrix(gr.value(ia)).transpose() * gm;
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("matmul_nt", av, bv);
  Tensor c({av.rows(), bv.rows()});
  as_matrix(c).noalias() = as_matrix(av) * as_matrix(bv).transpose();
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
    const auto gm = as_matrix(go);
    as_matrix(gr.grad_buffer(ia)).noalias() += gm * as_matrix(gr.value(ib));
    as_matrix(gr.grad_buffer(ib)).noalias() +=
        gm.transpose() * as_matrix(gr.value(ia));
  });
}

Var transpose(Var a) {
  Graph& g = *a.graph;
  const Tensor& av = a.value();
  Tensor t({av.cols(), av.rows()});
  as_matrix(t) = as_matrix(av).transpose();
  const std::size_t ia = a.id;
  return g.record(std::move(t), [ia](Graph& gr, const Tensor& go) {
    as_matrix(gr.grad_buffer(ia)) += as_matrix(go).transpose();
  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t ia = a.id, ib = b.id;
  if (av.size() == bv.size() && av.cols() == bv.cols()) {
    Tensor c = av;
    c += bv;
    return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
      gr.accumulate(ia, go);
      gr.accumulate(ib, go);
    });
  }
  if (bv.size() == 1) {
    Tensor c = av;
    const double s = bv[0];
    for (auto& v : c.values()) v += s;
    return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
      gr.accumulate(ia, go);
      double total = 0.0;
      for (double v : go.values()) total += v;
      gr.grad_buffer(ib)[0] += total;
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor c = av;
    as_matrix(c).rowwise() += as_matrix(bv).row(0);
    return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
      gr.accumulate(ia, go);
      as_matrix(gr.grad_buffer(ib)).row(0) += as_matrix(go).colwise().sum();
    });
  }
  shape_error("add", av, bv);
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size() || av.cols() != bv.cols()) {
    shape_error("mul", av, bv);
  }
  Tensor c(av.shape());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] * bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(c), [ia, ib](Graph& gr, const Tensor& go) {
    const Tensor& x = gr.value(ia);
    const Tensor& y = gr.value(ib);
    Tensor& gx = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * y[i];
    Tensor& gy = gr.grad_buffer(ib);
    for (std::size_t i = 0; i < go.size(); ++i) gy[i] += go[i] * x[i];
  });
}

Var scale(Var a, double factor) {
  Graph& g = *a.graph;
  Tensor c = a.value();
  for (auto& v : c.values()) v *= factor;
  const std::size_t ia = a.id;
  return g.record(std::move(c), [ia, factor](Graph& gr, const Tensor& go) {
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += factor * go[i];
  });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log_softmax(Var a, int axis) {
  if (axis != 0 && axis != 1) throw DimensionError("log_softmax: bad axis");
  if (axis == 0) return transpose(log_softmax(transpose(a), 1));
  Graph& g = *a.graph;
  const Tensor& x = a.value();
  Tensor y(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto out = y.row_span(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += std::exp(in[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < n; ++c) out[c] = in[c] - lse;
  }
  const std::size_t ia = a.id;
  const std::size_t io = g.size();
  return g.record(std::move(y), [ia, io](Graph& gr, const Tensor& go) {
    const Tensor& yv = gr.value(io);
    Tensor& ga = gr.grad_buffer(ia);
    const std::size_t cols = yv.cols();
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += go[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        ga[i] += go[i] - std::exp(yv[i]) * s;
      }
    }
  });
}

Var softmax(Var a, int axis) { return exp(log_softmax(a, axis)); }

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  if (axis != 0 && axis != 1) throw DimensionError("concat: bad axis");
  Graph& g = *parts[0].graph;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> extents;
  if (axis == 1) {
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
      if (p.rows() != rows) shape_error("concat", parts[0].value(), p.value());
      ids.push_back(p.id);
      extents.push_back(p.cols());
      cols += p.cols();
    }
    Tensor out({rows, cols});
    std::size_t off = 0;
    for (const Var& p : parts) {
      as_matrix(out).middleCols(off, p.cols()) = as_matrix(p.value());
      off += p.cols();
    }
    return g.record(std::move(out), [ids, extents](Graph& gr,
                                                   const Tensor& go) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        as_matrix(gr.grad_buffer(ids[k])) +=
            as_matrix(go).middleCols(off, extents[k]);
        off += extents[k];
      }
    });
  }
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat", parts[0].value(), p.value());
    ids.push_back(p.id);
    extents.push_back(p.rows());
    rows += p.rows();
  }
  Tensor out({rows, cols});
  std::size_t off = 0;
  for (const Var& p : parts) {
    as_matrix(out).middleRows(off, p.rows()) = as_matrix(p.value());
    off += p.rows();
  }
  return g.record(std::move(out), [ids, extents](Graph& gr, const Tensor& go) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      as_matrix(gr.grad_buffer(ids[k])) +=
          as_matrix(go).middleRows(off, extents[k]);
      off += extents[k];
    }
  });
}

Var slice(Var a, int axis, std::size_t start, std::size_t length) {
  Graph& g = *a.graph;
  const Tensor& x = a.value();
  const std::size_t ia = a.id;
  if (axis == 1) {
    if (start + length > x.cols()) {
      throw DimensionError("slice: columns out of range for " +
                           shape_string(x.shape()));
    }
    Tensor out({x.rows(), length});
    as_matrix(out) = as_matrix(x).middleCols(start, length);
    return g.record(std::move(out),
                    [ia, start, length](Graph& gr, const Tensor& go) {
                      as_matrix(gr.grad_buffer(ia)).middleCols(start, length) +=
                          as_matrix(go);
                    });
  }
  if (axis == 0) {
    if (start + length > x.rows()) {
      throw DimensionError("slice: rows out of range for " +
                           shape_string(x.shape()));
    }
    Tensor out({length, x.cols()});
    as_matrix(out) = as_matrix(x).middleRows(start, length);
    return g.record(std::move(out),
                    [ia, start, length](Graph& gr, const Tensor& go) {
                      as_matrix(gr.grad_buffer(ia)).middleRows(start, length) +=
                          as_matrix(go);
                    });
  }
  throw DimensionError("slice: bad axis");
}

Var mask(Var a, const Tensor& keep) {
  Graph& g = *a.graph;
  const Tensor& x = a.value();
  if (x.size() != keep.size()) shape_error("mask", x, keep);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * keep[i];
  const std::size_t ia = a.id;
  return g.record(std::move(out), [ia, keep](Graph& gr, const Tensor& go) {
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * keep[i];
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Graph& g = same_graph(a, gain);
  const Tensor& x = a.value();
  const std::size_t n = x.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    shape_error("layer_norm", x, gain.value());
  }
  Tensor xhat(x.shape());
  std::vector<double> inv_std(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    double m = 0.0;
    for (double v : in) m += v;
    m /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - m) * (v - m);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    auto out = xhat.row_span(r);
    for (std::size_t c = 0; c < n; ++c) out[c] = (in[c] - m) * inv_std[r];
  }
  Tensor y(x.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      y.at(r, c) = xhat.at(r, c) * gv[c] + bv[c];
    }
  }
  const std::size_t ia = a.id, ig = gain.id, ib = bias.id;
  return g.record(std::move(y), [ia, ig, ib, xhat, inv_std](
                                    Graph& gr, const Tensor& go) {
    const Tensor& gv = gr.value(ig);
    const std::size_t n = xhat.cols();
    Tensor& gx = gr.grad_buffer(ia);
    Tensor& gg = gr.grad_buffer(ig);
    Tensor& gb = gr.grad_buffer(ib);
    std::vector<double> dxhat(n);
    for (std::size_t r = 0; r < xhat.rows(); ++r) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double d = go.at(r, c);
        gg[c] += d * xhat.at(r, c);
        gb[c] += d;
        dxhat[c] = d * gv[c];
        mean_d += dxhat[c];
        mean_dx += dxhat[c] * xhat.at(r, c);
      }
      mean_d /= static_cast<double>(n);
      mean_dx /= static_cast<double>(n);
      for (std::size_t c = 0; c < n; ++c) {
        gx.at(r, c) +=
            inv_std[r] * (dxhat[c] - mean_d - xhat.at(r, c) * mean_dx);
      }
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Graph& g = *table.graph;
  const Tensor& t = table.value();
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out({idx.size(), t.cols()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= t.rows()) {
      throw DimensionError("gather_rows: id " + std::to_string(idx[i]) +
                           " outside table of " + std::to_string(t.rows()) +
                           " rows");
    }
    as_matrix(out).row(i) = as_matrix(t).row(idx[i]);
  }
  const std::size_t it = table.id;
  return g.record(std::move(out), [it, idx](Graph& gr, const Tensor& go) {
    auto gt = as_matrix(gr.grad_buffer(it));
    const auto gm = as_matrix(go);
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += gm.row(i);
  });
}

Var repeat_rows(Var row, std::size_t n) {
  Graph& g = *row.graph;
  const Tensor& r = row.value();
  if (r.rows() != 1) throw DimensionError("repeat_rows needs a single row");
  Tensor out({n, r.cols()});
  as_matrix(out).rowwise() = as_matrix(r).row(0);
  const std::size_t ir = row.id;
  return g.record(std::move(out), [ir](Graph& gr, const Tensor& go) {
    as_matrix(gr.grad_buffer(ir)).row(0) += as_matrix(go).colwise().sum();
  });
}

Var outer_add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("outer_add", av, bv);
  const std::size_t ra = av.rows(), rb = bv.rows(), n = av.cols();
  Tensor out({ra * rb, n});
  for (std::size_t i = 0; i < ra; ++i) {
    for (std::size_t j = 0; j < rb; ++j) {
      double* dst = out.data() + (i * rb + j) * n;
      const double* x = av.data() + i * n;
      const double* y = bv.data() + j * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] = x[c] + y[c];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.record(std::move(out), [ia, ib, ra, rb, n](Graph& gr,
                                                      const Tensor& go) {
    Tensor& ga = gr.grad_buffer(ia);
    Tensor& gb = gr.grad_buffer(ib);
    for (std::size_t i = 0; i < ra; ++i) {
      for (std::size_t j = 0; j < rb; ++j) {
        const double* src = go.data() + (i * rb + j) * n;
        double* x = ga.data() + i * n;
        double* y = gb.data() + j * n;
        for (std::size_t c = 0; c < n; ++c) {
          x[c] += src[c];
          y[c] += src[c];
        }
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = *a.graph;
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id;
  return g.record(std::move(out), [ia](Graph& gr, const Tensor& go) {
    Tensor& ga = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id;
  return g.record(Tensor::scalar(s), [ia](Graph& gr, const Tensor& go) {
    Tensor& ga = gr.grad_buffer(ia);
    for (auto& v : ga.values()) v += go[0];
  });
}

Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

}  // namespace ibasr
