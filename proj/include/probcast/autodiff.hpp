#pragma once

// Reverse-mode automatic differentiation over dense tensors, with exactly
// the operations the two forecasting architectures need. A Graph is a tape:
// nodes are appended in evaluation order and backward() replays the tape in
// reverse, accumulating gradients. LSTM, convolution, and pooling are fused
// ops with hand-written backward passes; matrix products go through Eigen.
//
// A Graph and its tensors belong to one thread; independent graphs on
// independent threads are safe.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "probcast/errors.hpp"
#include "probcast/rng.hpp"
#include "probcast/tensor.hpp"

namespace probcast {

enum class Activation { Linear, Relu, Tanh, Sigmoid };

// A named, trainable tensor. The grad slot accumulates across backward
// passes until the optimizer consumes it.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool is_weight = true;  // false for biases; L2 skips those

  Parameter() = default;
  Parameter(std::string n, Tensor t, bool weight = true)
      : name(std::move(n)), tensor(std::move(t)), is_weight(weight) {
    tensor.ensure_grad();
  }
};

namespace detail {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;
using EArr = Eigen::Map<Eigen::ArrayXd>;
using ECArr = Eigen::Map<const Eigen::ArrayXd>;
using StridedCMap = Eigen::Map<const EMat, 0, Eigen::OuterStride<>>;
using StridedMap = Eigen::Map<EMat, 0, Eigen::OuterStride<>>;

inline void apply_activation(Activation act, std::vector<double>& v) {
  EArr a(v.data(), static_cast<Eigen::Index>(v.size()));
  switch (act) {
    case Activation::Linear: break;
    case Activation::Relu: a = a.max(0.0); break;
    case Activation::Tanh: a = a.tanh(); break;
    case Activation::Sigmoid: a = 1.0 / (1.0 + (-a).exp()); break;
  }
}

// derivative expressed through the post-activation value y
inline double activation_grad(Activation act, double y) {
  switch (act) {
    case Activation::Linear: return 1.0;
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace detail

class Graph {
 public:
  using NodeId = int;

  // ---- leaves ----

  NodeId input(Tensor value) { return push(std::move(value), {}); }

  NodeId scalar(double v) { return input(Tensor({1}, {v})); }

  // Leaf tied to an external parameter; backward adds into p.tensor.grad.
  // The parameter must outlive the graph.
  NodeId param(Parameter& p) {
    const NodeId id = push(p.tensor, {});
    Parameter* ptr = &p;
    nodes_[id].back = [id, ptr](Graph& g) {
      ptr->tensor.ensure_grad();
      const auto& grad = g.nodes_[id].grad;
      for (std::size_t i = 0; i < grad.size(); ++i) ptr->tensor.grad[i] += grad[i];
    };
    return id;
  }

  // ---- core elementwise / structural ops ----

  NodeId add(NodeId a, NodeId b) { return binary("add", a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary("sub", a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary("mul", a, b); }
  NodeId div(NodeId a, NodeId b) { return binary("div", a, b); }

  NodeId tanh(NodeId a) { return unary("tanh", a); }
  NodeId sigmoid(NodeId a) { return unary("sigmoid", a); }
  NodeId relu(NodeId a) { return unary("relu", a); }
  NodeId exp(NodeId a) { return unary("exp", a); }
  NodeId log(NodeId a) { return unary("log", a); }
  NodeId softplus(NodeId a) { return unary("softplus", a); }

  NodeId matmul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
      throw shape_error("matmul: incompatible shapes " + shape_str(ta.shape) + " x " +
                        shape_str(tb.shape));
    const std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out({m, n});
    detail::EMap(out.data.data(), m, n).noalias() =
        detail::ECMap(ta.data.data(), m, k) * detail::ECMap(tb.data.data(), k, n);
    const NodeId id = push(std::move(out), {a, b});
    nodes_[id].back = [id, a, b, m, k, n](Graph& g) {
      detail::ECMap go(g.nodes_[id].grad.data(), m, n);
      detail::ECMap va(g.value(a).data.data(), m, k);
      detail::ECMap vb(g.value(b).data.data(), k, n);
      detail::EMap(g.grad_buf(a), m, k).noalias() += go * vb.transpose();
      detail::EMap(g.grad_buf(b), k, n).noalias() += va.transpose() * go;
    };
    return id;
  }

  NodeId reshape(NodeId a, Shape new_shape) {
    const Tensor& ta = value(a);
    if (shape_numel(new_shape) != ta.numel())
      throw shape_error("reshape: cannot view " + shape_str(ta.shape) + " as " +
                        shape_str(new_shape));
    Tensor out(std::move(new_shape), ta.data);
    const NodeId id = push(std::move(out), {a});
    nodes_[id].back = [id, a](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      double* ga = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    };
    return id;
  }

  // slice along an axis: keeps [start, stop) of that extent
  NodeId slice(NodeId a, std::size_t axis, std::size_t start, std::size_t stop) {
    const Tensor& ta = value(a);
    if (axis >= ta.rank() || start >= stop || stop > ta.shape[axis])
      throw shape_error("slice: range [" + std::to_string(start) + "," + std::to_string(stop) +
                        ") on axis " + std::to_string(axis) + " of " + shape_str(ta.shape));
    Shape out_shape = ta.shape;
    out_shape[axis] = stop - start;
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= ta.shape[i];
    for (std::size_t i = axis + 1; i < ta.rank(); ++i) inner *= ta.shape[i];
    const std::size_t in_axis = ta.shape[axis];
    Tensor out(out_shape);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = start; j < stop; ++j)
        std::copy_n(ta.data.data() + (o * in_axis + j) * inner, inner,
                    out.data.data() + (o * (stop - start) + (j - start)) * inner);
    const NodeId id = push(std::move(out), {a});
    nodes_[id].back = [id, a, axis, start, stop, outer, inner, in_axis](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      double* ga = g.grad_buf(a);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = start; j < stop; ++j) {
          const double* src = go.data() + (o * (stop - start) + (j - start)) * inner;
          double* dst = ga + (o * in_axis + j) * inner;
          for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    };
    return id;
  }

  NodeId concat(NodeId a, NodeId b, std::size_t axis) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != tb.rank() || axis >= ta.rank())
      throw shape_error("concat: ranks/axis mismatch " + shape_str(ta.shape) + " | " +
                        shape_str(tb.shape));
    for (std::size_t i = 0; i < ta.rank(); ++i)
      if (i != axis && ta.shape[i] != tb.shape[i])
        throw shape_error("concat: shapes " + shape_str(ta.shape) + " | " + shape_str(tb.shape) +
                          " differ off axis " + std::to_string(axis));
    Shape out_shape = ta.shape;
    out_shape[axis] += tb.shape[axis];
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= ta.shape[i];
    for (std::size_t i = axis + 1; i < ta.rank(); ++i) inner *= ta.shape[i];
    const std::size_t na = ta.shape[axis] * inner, nb = tb.shape[axis] * inner;
    Tensor out(out_shape);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(ta.data.data() + o * na, na, out.data.data() + o * (na + nb));
      std::copy_n(tb.data.data() + o * nb, nb, out.data.data() + o * (na + nb) + na);
    }
    const NodeId id = push(std::move(out), {a, b});
    nodes_[id].back = [id, a, b, outer, na, nb](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      double* ga = g.grad_buf(a);
      double* gb = g.grad_buf(b);
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = go.data() + o * (na + nb);
        for (std::size_t i = 0; i < na; ++i) ga[o * na + i] += src[i];
        for (std::size_t i = 0; i < nb; ++i) gb[o * nb + i] += src[na + i];
      }
    };
    return id;
  }

  NodeId reduce_sum(NodeId a) { return reduce(a, false); }
  NodeId reduce_mean(NodeId a) { return reduce(a, true); }

  // ---- layers ----

  // activation(input . w + bias); input [b,n], w [n,m], bias [m]
  NodeId dense(NodeId in, NodeId w, NodeId bias, Activation act) {
    NodeId y = add(matmul(in, w), bias);
    return activate(y, act);
  }

  NodeId activate(NodeId a, Activation act) {
    switch (act) {
      case Activation::Linear: return a;
      case Activation::Relu: return relu(a);
      case Activation::Tanh: return tanh(a);
      case Activation::Sigmoid: return sigmoid(a);
    }
    return a;
  }

  // Standard LSTM over input [b,t,n] with fused gates (order i,f,g,o) and
  // zero initial states. wx [n,4h], wh [h,4h], bias [4h]. Returns [b,t,h]
  // when return_sequences, else [b,h] (last step).
  NodeId lstm(NodeId in, NodeId wx, NodeId wh, NodeId bias, bool return_sequences) {
    const Tensor& tin = value(in);
    const Tensor& twx = value(wx);
    const Tensor& twh = value(wh);
    const Tensor& tb = value(bias);
    if (tin.rank() != 3)
      throw shape_error("lstm: input must be rank 3, got " + shape_str(tin.shape));
    const std::size_t b = tin.shape[0], t = tin.shape[1], n = tin.shape[2];
    if (t < 1) throw shape_error("lstm: needs at least one time step");
    if (twx.rank() != 2 || twx.shape[0] != n || twx.shape[1] % 4 != 0)
      throw shape_error("lstm: wx shape " + shape_str(twx.shape) + " does not match input " +
                        shape_str(tin.shape));
    const std::size_t h = twx.shape[1] / 4;
    if (twh.rank() != 2 || twh.shape[0] != h || twh.shape[1] != 4 * h || tb.numel() != 4 * h)
      throw shape_error("lstm: recurrent/bias shapes " + shape_str(twh.shape) + ", " +
                        shape_str(tb.shape) + " inconsistent with hidden size " +
                        std::to_string(h));

    auto cache = std::make_shared<LstmCache>();
    cache->b = b;
    cache->t = t;
    cache->n = n;
    cache->h = h;
    const std::size_t bh = b * h;
    cache->i.assign(t * bh, 0.0);
    cache->f.assign(t * bh, 0.0);
    cache->g.assign(t * bh, 0.0);
    cache->o.assign(t * bh, 0.0);
    cache->c.assign(t * bh, 0.0);
    cache->tc.assign(t * bh, 0.0);
    cache->hs.assign(t * bh, 0.0);

    std::vector<double> z(b * 4 * h);
    std::vector<double> hprev(bh, 0.0);
    std::vector<double> cprev(bh, 0.0);
    for (std::size_t s = 0; s < t; ++s) {
      detail::EMap zm(z.data(), b, 4 * h);
      detail::StridedCMap xs(tin.data.data() + s * n, b, n,
                             Eigen::OuterStride<>(static_cast<Eigen::Index>(t * n)));
      zm.noalias() = xs * detail::ECMap(twx.data.data(), n, 4 * h);
      zm.noalias() += detail::ECMap(hprev.data(), b, h) * detail::ECMap(twh.data.data(), h, 4 * h);
      zm.rowwise() += detail::ECMap(tb.data.data(), 1, 4 * h).row(0);
      double* gi = cache->i.data() + s * bh;
      double* gf = cache->f.data() + s * bh;
      double* gg = cache->g.data() + s * bh;
      double* go = cache->o.data() + s * bh;
      double* cc = cache->c.data() + s * bh;
      double* tc = cache->tc.data() + s * bh;
      double* hh = cache->hs.data() + s * bh;
      for (std::size_t r = 0; r < b; ++r) {
        const double* zr = z.data() + r * 4 * h;
        auto seg = [&](int gate) {
          return detail::ECArr(zr + gate * h, static_cast<Eigen::Index>(h));
        };
        detail::EArr(gi + r * h, h) = 1.0 / (1.0 + (-seg(0)).exp());
        detail::EArr(gf + r * h, h) = 1.0 / (1.0 + (-seg(1)).exp());
        detail::EArr(gg + r * h, h) = seg(2).tanh();
        detail::EArr(go + r * h, h) = 1.0 / (1.0 + (-seg(3)).exp());
      }
      {
        detail::ECArr iv(gi, bh), fv(gf, bh), gv(gg, bh), ov(go, bh), cp(cprev.data(), bh);
        detail::EArr cv(cc, bh);
        cv = fv * cp + iv * gv;
        detail::EArr tv(tc, bh);
        tv = cv.tanh();
        detail::EArr hv(hh, bh);
        hv = ov * tv;
      }
      std::copy_n(hh, bh, hprev.data());
      std::copy_n(cc, bh, cprev.data());
    }

    Tensor out;
    if (return_sequences) {
      out = Tensor({b, t, h});
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t s = 0; s < t; ++s)
          std::copy_n(cache->hs.data() + s * b * h + r * h, h,
                      out.data.data() + (r * t + s) * h);
    } else {
      out = Tensor({b, h});
      std::copy_n(cache->hs.data() + (t - 1) * bh, bh, out.data.data());
    }

    const NodeId id = push(std::move(out), {in, wx, wh, bias});
    nodes_[id].back = [id, in, wx, wh, bias, cache, return_sequences](Graph& g) {
      g.lstm_backward(id, in, wx, wh, bias, *cache, return_sequences);
    };
    return id;
  }

  // Valid cross-correlation over input [b,t,c] with kernel [k,c,f] and bias
  // [f]; output [b,t-k+1,f] with the activation applied.
  NodeId conv1d(NodeId in, NodeId kernel, NodeId bias, Activation act) {
    const Tensor& tin = value(in);
    const Tensor& tk = value(kernel);
    const Tensor& tb = value(bias);
    if (tin.rank() != 3 || tk.rank() != 3)
      throw shape_error("conv1d: input " + shape_str(tin.shape) + " kernel " +
                        shape_str(tk.shape));
    const std::size_t b = tin.shape[0], t = tin.shape[1], c = tin.shape[2];
    const std::size_t k = tk.shape[0], f = tk.shape[2];
    if (tk.shape[1] != c)
      throw shape_error("conv1d: kernel channels " + shape_str(tk.shape) +
                        " do not match input " + shape_str(tin.shape));
    if (t < k)
      throw shape_error("conv1d: sequence length " + std::to_string(t) + " shorter than kernel " +
                        std::to_string(k));
    if (tb.numel() != f)
      throw shape_error("conv1d: bias " + shape_str(tb.shape) + " vs filters " +
                        std::to_string(f));
    const std::size_t tout = t - k + 1;
    // im2col: rows are (batch, position), columns the k*c window values
    auto cols = std::make_shared<std::vector<double>>(b * tout * k * c);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t p = 0; p < tout; ++p)
        std::copy_n(tin.data.data() + (r * t + p) * c, k * c,
                    cols->data() + (r * tout + p) * k * c);
    Tensor out({b, tout, f});
    detail::EMap om(out.data.data(), b * tout, f);
    om.noalias() = detail::ECMap(cols->data(), b * tout, k * c) * detail::ECMap(tk.data.data(), k * c, f);
    om.rowwise() += detail::ECMap(tb.data.data(), 1, f).row(0);
    detail::apply_activation(act, out.data);

    const NodeId id = push(std::move(out), {in, kernel, bias});
    nodes_[id].back = [id, in, kernel, bias, cols, act, b, t, c, k, f, tout](Graph& g) {
      const Tensor& vout = g.value(id);
      const auto& go = g.nodes_[id].grad;
      std::vector<double> dpre(go.size());
      for (std::size_t i = 0; i < go.size(); ++i)
        dpre[i] = go[i] * detail::activation_grad(act, vout.data[i]);
      detail::ECMap dm(dpre.data(), b * tout, f);
      // kernel and bias grads
      detail::EMap(g.grad_buf(kernel), k * c, f).noalias() +=
          detail::ECMap(cols->data(), b * tout, k * c).transpose() * dm;
      detail::EMap(g.grad_buf(bias), 1, f) += dm.colwise().sum();
      // input grads: scatter the column gradient back into the windows
      std::vector<double> dcols(cols->size());
      detail::EMap(dcols.data(), b * tout, k * c).noalias() =
          dm * detail::ECMap(g.value(kernel).data.data(), k * c, f).transpose();
      double* gin = g.grad_buf(in);
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t p = 0; p < tout; ++p) {
          const double* src = dcols.data() + (r * tout + p) * k * c;
          double* dst = gin + (r * t + p) * c;
          for (std::size_t i = 0; i < k * c; ++i) dst[i] += src[i];
        }
    };
    return id;
  }

  // Max pooling over time: input [b,t,c] -> [b, floor(t/p), c]; the trailing
  // remainder is dropped and gradients route to the first argmax.
  NodeId maxpool1d(NodeId in, std::size_t pool) {
    const Tensor& tin = value(in);
    if (tin.rank() != 3) throw shape_error("maxpool1d: input " + shape_str(tin.shape));
    if (pool < 1) throw shape_error("maxpool1d: pool size must be >= 1");
    const std::size_t b = tin.shape[0], t = tin.shape[1], c = tin.shape[2];
    const std::size_t tout = t / pool;
    if (tout == 0)
      throw shape_error("maxpool1d: pool " + std::to_string(pool) + " longer than sequence " +
                        std::to_string(t));
    Tensor out({b, tout, c});
    auto argmax = std::make_shared<std::vector<std::size_t>>(b * tout * c);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t q = 0; q < tout; ++q)
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = (r * t + q * pool) * c + ch;
          for (std::size_t j = 1; j < pool; ++j) {
            const std::size_t idx = (r * t + q * pool + j) * c + ch;
            if (tin.data[idx] > tin.data[best]) best = idx;
          }
          out.data[(r * tout + q) * c + ch] = tin.data[best];
          (*argmax)[(r * tout + q) * c + ch] = best;
        }
    const NodeId id = push(std::move(out), {in});
    nodes_[id].back = [id, in, argmax](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      double* gin = g.grad_buf(in);
      for (std::size_t i = 0; i < go.size(); ++i) gin[(*argmax)[i]] += go[i];
    };
    return id;
  }

  // collapse all trailing axes: [b, ...] -> [b, prod(...)]
  NodeId flatten(NodeId in) {
    const Tensor& tin = value(in);
    if (tin.rank() < 2) throw shape_error("flatten: input " + shape_str(tin.shape));
    return reshape(in, {tin.shape[0], tin.numel() / tin.shape[0]});
  }

  // Inverted dropout: zero with probability rate and scale survivors by
  // 1/(1-rate) during training; identity at inference.
  NodeId dropout(NodeId in, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::domain_error("dropout: rate outside [0, 1)");
    if (!training || rate == 0.0) return in;
    const Tensor& tin = value(in);
    auto mask = std::make_shared<std::vector<double>>(tin.numel());
    const double scale = 1.0 / (1.0 - rate);
    Tensor out(tin.shape);
    for (std::size_t i = 0; i < tin.numel(); ++i) {
      (*mask)[i] = rng.uniform() < rate ? 0.0 : scale;
      out.data[i] = tin.data[i] * (*mask)[i];
    }
    const NodeId id = push(std::move(out), {in});
    nodes_[id].back = [id, in, mask](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      double* gin = g.grad_buf(in);
      for (std::size_t i = 0; i < go.size(); ++i) gin[i] += go[i] * (*mask)[i];
    };
    return id;
  }

  // ---- access & backward ----

  const Tensor& value(NodeId id) const { return nodes_[id].value; }

  const std::vector<double>& grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.numel()) n.grad.assign(n.value.numel(), 0.0);
    return n.grad;
  }

  // Backward from a scalar node, seeding d(node)/d(node) = 1.
  void backward(NodeId from) {
    if (value(from).numel() != 1)
      throw shape_error("backward: node is not scalar, shape " + shape_str(value(from).shape));
    seed_and_run(from, {1.0});
  }

  // Backward from any node with an externally supplied gradient (used to
  // inject analytic NLL head gradients).
  void backward_with(NodeId from, const std::vector<double>& seed) {
    if (seed.size() != value(from).numel())
      throw shape_error("backward: seed size " + std::to_string(seed.size()) +
                        " vs node shape " + shape_str(value(from).shape));
    seed_and_run(from, seed);
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::function<void(Graph&)> back;
  };

  struct LstmCache {
    std::size_t b = 0, t = 0, n = 0, h = 0;
    std::vector<double> i, f, g, o, c, tc, hs;
  };

  std::vector<Node> nodes_;

  NodeId push(Tensor value, std::initializer_list<NodeId>) {
    nodes_.push_back(Node{std::move(value), {}, {}});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  double* grad_buf(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.numel()) n.grad.assign(n.value.numel(), 0.0);
    return n.grad.data();
  }

  void seed_and_run(NodeId from, const std::vector<double>& seed) {
    Node& n = nodes_[from];
    n.grad = seed;
    for (int i = from; i >= 0; --i) {
      if (nodes_[i].back && !nodes_[i].grad.empty()) nodes_[i].back(*this);
    }
  }

  NodeId unary(const char* op, NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape, ta.data);
    const std::string name(op);
    if (name == "tanh") {
      detail::apply_activation(Activation::Tanh, out.data);
    } else if (name == "sigmoid") {
      detail::apply_activation(Activation::Sigmoid, out.data);
    } else if (name == "relu") {
      detail::apply_activation(Activation::Relu, out.data);
    } else if (name == "exp") {
      detail::EArr v(out.data.data(), out.data.size());
      v = v.exp();
    } else if (name == "log") {
      detail::EArr v(out.data.data(), out.data.size());
      v = v.log();
    } else {  // softplus
      for (auto& x : out.data) x = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    }
    const NodeId id = push(std::move(out), {a});
    nodes_[id].back = [id, a, name](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      const auto& y = g.value(id).data;
      const auto& x = g.value(a).data;
      double* ga = g.grad_buf(a);
      if (name == "tanh") {
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - y[i] * y[i]);
      } else if (name == "sigmoid") {
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
      } else if (name == "relu") {
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += x[i] > 0.0 ? go[i] : 0.0;
      } else if (name == "exp") {
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i];
      } else if (name == "log") {
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] / x[i];
      } else {  // softplus'(x) = sigmoid(x)
        for (std::size_t i = 0; i < go.size(); ++i) {
          const double s = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                       : std::exp(x[i]) / (1.0 + std::exp(x[i]));
          ga[i] += go[i] * s;
        }
      }
    };
    return id;
  }

  // broadcast classes: equal shapes, scalar {1} on either side, or a
  // trailing-axis vector on the right (bias add)
  enum class Bcast { Equal, ScalarLeft, ScalarRight, RowRight };

  Bcast classify(const char* op, const Tensor& a, const Tensor& b) const {
    if (a.shape == b.shape) return Bcast::Equal;
    if (a.numel() == 1) return Bcast::ScalarLeft;
    if (b.numel() == 1) return Bcast::ScalarRight;
    if (b.rank() == 1 && a.rank() >= 2 && a.shape.back() == b.shape[0]) return Bcast::RowRight;
    throw shape_error(std::string(op) + ": incompatible shapes " + shape_str(a.shape) + " vs " +
                      shape_str(b.shape));
  }

  NodeId binary(const char* op, NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const Bcast bc = classify(op, ta, tb);
    const std::string name(op);
    const Shape out_shape = bc == Bcast::ScalarLeft ? tb.shape : ta.shape;
    Tensor out(out_shape);
    const std::size_t n = out.numel();
    auto lhs = [&](std::size_t i) {
      return bc == Bcast::ScalarLeft ? ta.data[0] : ta.data[i];
    };
    auto rhs = [&](std::size_t i) {
      if (bc == Bcast::ScalarRight) return tb.data[0];
      if (bc == Bcast::RowRight) return tb.data[i % tb.numel()];
      if (bc == Bcast::ScalarLeft) return tb.data[i];
      return tb.data[i];
    };
    for (std::size_t i = 0; i < n; ++i) {
      const double x = lhs(i), y = rhs(i);
      out.data[i] = name == "add"   ? x + y
                    : name == "sub" ? x - y
                    : name == "mul" ? x * y
                                    : x / y;
    }
    const NodeId id = push(std::move(out), {a, b});
    nodes_[id].back = [id, a, b, bc, name](Graph& g) {
      const auto& go = g.nodes_[id].grad;
      const auto& va = g.value(a).data;
      const auto& vb = g.value(b).data;
      double* ga = g.grad_buf(a);
      double* gb = g.grad_buf(b);
      const std::size_t nb = vb.size();
      for (std::size_t i = 0; i < go.size(); ++i) {
        const double x = bc == Bcast::ScalarLeft ? va[0] : va[i];
        const double y = bc == Bcast::ScalarRight ? vb[0]
                         : bc == Bcast::RowRight  ? vb[i % nb]
                                                  : vb[bc == Bcast::ScalarLeft ? i : i];
        double da, db;
        if (name == "add") {
          da = go[i];
          db = go[i];
        } else if (name == "sub") {
          da = go[i];
          db = -go[i];
        } else if (name == "mul") {
          da = go[i] * y;
          db = go[i] * x;
        } else {
          da = go[i] / y;
          db = -go[i] * x / (y * y);
        }
        if (bc == Bcast::ScalarLeft) {
          ga[0] += da;
        } else {
          ga[i] += da;
        }
        if (bc == Bcast::ScalarRight) {
          gb[0] += db;
        } else if (bc == Bcast::RowRight) {
          gb[i % nb] += db;
        } else if (bc == Bcast::ScalarLeft) {
          gb[i] += db;
        } else {
          gb[i] += db;
        }
      }
    };
    return id;
  }

  NodeId reduce(NodeId a, bool mean) {
    const Tensor& ta = value(a);
    const double scale = mean ? 1.0 / static_cast<double>(ta.numel()) : 1.0;
    double total = 0.0;
    for (double v : ta.data) total += v;
    Tensor out({1}, {total * scale});
    const NodeId id = push(std::move(out), {a});
    nodes_[id].back = [id, a, scale](Graph& g) {
      const double go = g.nodes_[id].grad[0] * scale;
      double* ga = g.grad_buf(a);
      const std::size_t n = g.value(a).numel();
      for (std::size_t i = 0; i < n; ++i) ga[i] += go;
    };
    return id;
  }

  void lstm_backward(NodeId id, NodeId in, NodeId wx, NodeId wh, NodeId bias,
                     const LstmCache& cc, bool return_sequences) {
    const std::size_t b = cc.b, t = cc.t, n = cc.n, h = cc.h;
    const std::size_t bh = b * h;
    const auto& go = nodes_[id].grad;
    const Tensor& tin = value(in);
    const Tensor& twx = value(wx);
    const Tensor& twh = value(wh);

    std::vector<double> dh(bh, 0.0), dc(bh, 0.0), dz(b * 4 * h);
    double* gin = grad_buf(in);
    double* gwx = grad_buf(wx);
    double* gwh = grad_buf(wh);
    double* gb = grad_buf(bias);

    for (std::size_t s = t; s-- > 0;) {
      // fold in the gradient arriving at this step's output
      if (return_sequences) {
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t j = 0; j < h; ++j) dh[r * h + j] += go[(r * t + s) * h + j];
      } else if (s == t - 1) {
        for (std::size_t i = 0; i < bh; ++i) dh[i] += go[i];
      }
      const double* gi = cc.i.data() + s * bh;
      const double* gf = cc.f.data() + s * bh;
      const double* gg = cc.g.data() + s * bh;
      const double* goo = cc.o.data() + s * bh;
      const double* cv = cc.c.data() + s * bh;
      const double* tv = cc.tc.data() + s * bh;
      const double* cprev = s > 0 ? cc.c.data() + (s - 1) * bh : nullptr;
      (void)cv;
      for (std::size_t i = 0; i < bh; ++i) {
        const double d_o = dh[i] * tv[i];
        const double d_c = dh[i] * goo[i] * (1.0 - tv[i] * tv[i]) + dc[i];
        const double cp = cprev ? cprev[i] : 0.0;
        const double d_f = d_c * cp;
        const double d_i = d_c * gg[i];
        const double d_g = d_c * gi[i];
        dc[i] = d_c * gf[i];
        const std::size_t r = i / h, j = i % h;
        double* zr = dz.data() + r * 4 * h;
        zr[j] = d_i * gi[i] * (1.0 - gi[i]);
        zr[h + j] = d_f * gf[i] * (1.0 - gf[i]);
        zr[2 * h + j] = d_g * (1.0 - gg[i] * gg[i]);
        zr[3 * h + j] = d_o * goo[i] * (1.0 - goo[i]);
      }
      detail::ECMap dzm(dz.data(), b, 4 * h);
      detail::StridedCMap xs(tin.data.data() + s * n, b, n,
                             Eigen::OuterStride<>(static_cast<Eigen::Index>(t * n)));
      detail::EMap(gwx, n, 4 * h).noalias() += xs.transpose() * dzm;
      if (s > 0) {
        detail::ECMap hp(cc.hs.data() + (s - 1) * bh, b, h);
        detail::EMap(gwh, h, 4 * h).noalias() += hp.transpose() * dzm;
      }
      detail::EMap(gb, 1, 4 * h) += dzm.colwise().sum();
      detail::StridedMap gx(gin + s * n, b, n,
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(t * n)));
      gx.noalias() += dzm * detail::ECMap(twx.data.data(), n, 4 * h).transpose();
      if (s > 0) {
        detail::EMap(dh.data(), b, h).noalias() =
            dzm * detail::ECMap(twh.data.data(), h, 4 * h).transpose();
      }
    }
  }
};

}  // namespace probcast
