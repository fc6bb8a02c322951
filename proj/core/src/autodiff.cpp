// Copyright 2026 The GeoGNN Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geognn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "geognn/errors.hpp"
#include "geognn/params.hpp"
#include "geognn/rng.hpp"

namespace geognn {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  return push(std::move(value), "constant", {}, nullptr);
}

Var Tape::leaf(Tensor value) {
  Var v = push(std::move(value), "leaf", {}, nullptr);
  nodes_[v.id].requires_grad = true;
  return v;
}

Var Tape::parameter(const ParamStore& store, std::size_t index) {
  if (bound_store_ != nullptr && bound_store_ != &store) {
    throw std::logic_error("a tape can bind parameters from a single store only");
  }
  bound_store_ = &store;
  if (param_nodes_.size() < store.size()) param_nodes_.resize(store.size());
  if (param_nodes_[index]) return Var{this, *param_nodes_[index]};
  Node n;
  n.external = &store[index].value;
  n.requires_grad = true;
  n.param_index = index;
  nodes_.push_back(std::move(n));
  param_nodes_[index] = nodes_.size() - 1;
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return node_value(v.id); }

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) {
    const Tensor& val = node_value(v.id);
    return Tensor(val.rows(), val.cols());
  }
  return n.grad;
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& val = node_value(id);
    n.grad = Tensor(val.rows(), val.cols());
  }
  return n.grad;
}

Var Tape::push(Tensor value, std::string_view op, std::vector<std::size_t> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericalError("non-finite value produced by " + std::string(op) + " " +
                         value.shape_string());
  }
  Node n;
  n.value = std::move(value);
  for (std::size_t in : inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: variable from another tape");
  const Tensor& lv = node_value(loss.id);
  if (lv.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got " + lv.shape_string());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_slot(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

GradBuffer Tape::parameter_gradients(const ParamStore& store) const {
  GradBuffer out(store.size());
  for (std::size_t i = 0; i < param_nodes_.size() && i < store.size(); ++i) {
    if (!param_nodes_[i]) continue;
    const Node& n = nodes_[*param_nodes_[i]];
    if (!n.grad.empty()) out[i] = n.grad;
  }
  return out;
}

namespace {

enum class Broadcast { kSame, kLeftScalar, kRightScalar };

Broadcast check_binary(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_string() +
                              " and " + b.shape_string());
}

Tensor& shape_of(Tensor& t, const Tensor& a, const Tensor& b) {
  t = a.size() >= b.size() ? Tensor(a.rows(), a.cols()) : Tensor(b.rows(), b.cols());
  return t;
}

// Generic elementwise binary op with scalar broadcast. `f` computes the
// value, `dfa`/`dfb` the partials given (a, b, out).
template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA dfa, DB dfb) {
  Tape& tape = *a.tape;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = check_binary(av, bv, name);
  Tensor out;
  shape_of(out, av, bv);
  const std::size_t n = out.size();
  auto ai = [&](std::size_t i) { return mode == Broadcast::kLeftScalar ? av[0] : av[i]; };
  auto bi = [&](std::size_t i) { return mode == Broadcast::kRightScalar ? bv[0] : bv[i]; };
  for (std::size_t i = 0; i < n; ++i) out[i] = f(ai(i), bi(i));
  const std::size_t aid = a.id, bid = b.id;
  return tape.push(std::move(out), name, {aid, bid}, [aid, bid, mode, dfa, dfb](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    const Tensor& av = t.value(Var{&t, aid});
    const Tensor& bv = t.value(Var{&t, bid});
    const Tensor& ov = t.value(Var{&t, self});
    const std::size_t n = g.size();
    auto ai = [&](std::size_t i) { return mode == Broadcast::kLeftScalar ? av[0] : av[i]; };
    auto bi = [&](std::size_t i) { return mode == Broadcast::kRightScalar ? bv[0] : bv[i]; };
    if (t.needs(aid)) {
      Tensor& ga = t.grad_slot(aid);
      for (std::size_t i = 0; i < n; ++i) {
        const Real d = g[i] * dfa(ai(i), bi(i), ov[i]);
        if (mode == Broadcast::kLeftScalar) ga[0] += d; else ga[i] += d;
      }
    }
    if (t.needs(bid)) {
      Tensor& gb = t.grad_slot(bid);
      for (std::size_t i = 0; i < n; ++i) {
        const Real d = g[i] * dfb(ai(i), bi(i), ov[i]);
        if (mode == Broadcast::kRightScalar) gb[0] += d; else gb[i] += d;
      }
    }
  });
}

template <class F, class DF>
Var unary(Var x, const char* name, F f, DF df) {
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xid = x.id;
  return tape.push(std::move(out), name, {xid}, [xid, df](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    const Tensor& xv = t.value(Var{&t, xid});
    const Tensor& ov = t.value(Var{&t, self});
    Tensor& gx = t.grad_slot(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], ov[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ " + av.shape_string() + " x " +
                                bv.shape_string());
  }
  Tensor out(av.rows(), bv.cols());
  gemm_accumulate(av, bv, out);
  const std::size_t aid = a.id, bid = b.id;
  return a.tape->push(std::move(out), "matmul", {aid, bid}, [aid, bid](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs(aid)) gemm_a_bt_accumulate(g, t.value(Var{&t, bid}), t.grad_slot(aid));
    if (t.needs(bid)) gemm_at_b_accumulate(t.value(Var{&t, aid}), g, t.grad_slot(bid));
  });
}

Var add(Var a, Var b) {
  return binary(
      a, b, "add", [](Real x, Real y) { return x + y; }, [](Real, Real, Real) { return 1.0; },
      [](Real, Real, Real) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      a, b, "sub", [](Real x, Real y) { return x - y; }, [](Real, Real, Real) { return 1.0; },
      [](Real, Real, Real) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      a, b, "mul", [](Real x, Real y) { return x * y; }, [](Real, Real y, Real) { return y; },
      [](Real x, Real, Real) { return x; });
}

Var div(Var a, Var b) {
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < bv.size(); ++i) {
    if (bv[i] == 0.0) throw NumericalError("div: division by zero");
  }
  return binary(
      a, b, "div", [](Real x, Real y) { return x / y; }, [](Real, Real y, Real) { return 1.0 / y; },
      [](Real x, Real y, Real) { return -x / (y * y); });
}

Var relu(Var x) {
  return unary(
      x, "relu", [](Real v) { return v > 0.0 ? v : 0.0; },
      [](Real v, Real) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, "exp", [](Real v) { return std::exp(v); }, [](Real, Real o) { return o; });
}

Var log(Var x) {
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) throw NumericalError("log: non-positive argument " + std::to_string(xv[i]));
  }
  return unary(
      x, "log", [](Real v) { return std::log(v); }, [](Real v, Real) { return 1.0 / v; });
}

Var square(Var x) {
  return unary(
      x, "square", [](Real v) { return v * v; }, [](Real v, Real) { return 2.0 * v; });
}

Var scale(Var x, Real factor) {
  return unary(
      x, "scale", [factor](Real v) { return factor * v; }, [factor](Real, Real) { return factor; });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw std::invalid_argument("add_bias: bias " + bv.shape_string() + " for input " +
                                xv.shape_string());
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const std::size_t xid = x.id, bid = bias.id;
  return x.tape->push(std::move(out), "add_bias", {xid, bid}, [xid, bid](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs(xid)) {
      Tensor& gx = t.grad_slot(xid);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.needs(bid)) {
      Tensor& gb = t.grad_slot(bid);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

Var linear(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

Var segment_sum(Var values, std::span<const std::uint32_t> segment_ids, std::size_t num_segments) {
  const Tensor& v = values.value();
  if (segment_ids.size() != v.rows()) {
    throw std::invalid_argument("segment_sum: " + std::to_string(segment_ids.size()) +
                                " ids for " + std::to_string(v.rows()) + " rows");
  }
  for (std::uint32_t id : segment_ids) {
    if (id >= num_segments) {
      throw std::out_of_range("segment_sum: segment id " + std::to_string(id) + " out of range [0, " +
                              std::to_string(num_segments) + ")");
    }
  }
  const std::size_t d = v.cols();
  Tensor out(num_segments, d);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    Real* o = out.data() + segment_ids[r] * d;
    const Real* in = v.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) o[c] += in[c];
  }
  std::vector<std::uint32_t> ids(segment_ids.begin(), segment_ids.end());
  const std::size_t vid = values.id;
  return values.tape->push(std::move(out), "segment_sum", {vid},
                           [vid, ids = std::move(ids)](Tape& t, std::size_t self) {
                             const Tensor& g = t.out_grad(self);
                             Tensor& gv = t.grad_slot(vid);
                             const std::size_t d = g.cols();
                             for (std::size_t r = 0; r < ids.size(); ++r) {
                               const Real* src = g.data() + ids[r] * d;
                               Real* dst = gv.data() + r * d;
                               for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                             }
                           });
}

Var gather_rows(Var x, std::span<const std::uint32_t> indices) {
  const Tensor& xv = x.value();
  const std::size_t d = xv.cols();
  Tensor out(indices.size(), d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= xv.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(indices[r]) + " for " +
                              std::to_string(xv.rows()) + " rows");
    }
    std::copy_n(xv.data() + indices[r] * d, d, out.data() + r * d);
  }
  std::vector<std::uint32_t> idx(indices.begin(), indices.end());
  const std::size_t xid = x.id;
  return x.tape->push(std::move(out), "gather_rows", {xid},
                      [xid, idx = std::move(idx)](Tape& t, std::size_t self) {
                        const Tensor& g = t.out_grad(self);
                        Tensor& gx = t.grad_slot(xid);
                        const std::size_t d = g.cols();
                        for (std::size_t r = 0; r < idx.size(); ++r) {
                          const Real* src = g.data() + r * d;
                          Real* dst = gx.data() + idx[r] * d;
                          for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                        }
                      });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& tape = *parts[0].tape;
  const std::size_t n = parts[0].rows();
  std::size_t width = 0;
  std::vector<std::size_t> ids, offsets, widths;
  for (const Var& p : parts) {
    if (p.rows() != n) throw std::invalid_argument("concat_cols: row counts differ");
    ids.push_back(p.id);
    offsets.push_back(width);
    widths.push_back(p.cols());
    width += p.cols();
  }
  Tensor out(n, width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * width + offsets[k]);
  }
  return tape.push(std::move(out), "concat_cols", ids,
                   [ids, offsets, widths, width](Tape& t, std::size_t self) {
                     const Tensor& g = t.out_grad(self);
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (!t.needs(ids[k])) continue;
                       Tensor& gp = t.grad_slot(ids[k]);
                       for (std::size_t r = 0; r < g.rows(); ++r)
                         for (std::size_t c = 0; c < widths[k]; ++c)
                           gp[r * widths[k] + c] += g[r * width + offsets[k] + c];
                     }
                   });
}

Var layer_norm(Var x, Var gamma, Var beta, Real eps) {
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  if (gv.rows() != 1 || gv.cols() != d || !bv.same_shape(gv)) {
    throw std::invalid_argument("layer_norm: scale/shift must be [1, " + std::to_string(d) + "]");
  }
  Tensor out(n, d);
  // Cache normalized values and inverse std for the backward pass.
  Tensor xhat(n, d);
  std::vector<Real> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    Real mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv(r, c);
    mu /= static_cast<Real>(d);
    Real var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xv(r, c) - mu) * (xv(r, c) - mu);
    var /= static_cast<Real>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (xv(r, c) - mu) * inv_std[r];
      out(r, c) = gv[c] * xhat(r, c) + bv[c];
    }
  }
  const std::size_t xid = x.id, gid = gamma.id, bid = beta.id;
  return x.tape->push(
      std::move(out), "layer_norm", {xid, gid, bid},
      [xid, gid, bid, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& g = t.out_grad(self);
        const Tensor& gv = t.value(Var{&t, gid});
        const std::size_t n = g.rows(), d = g.cols();
        if (t.needs(gid)) {
          Tensor& gg = t.grad_slot(gid);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (t.needs(bid)) {
          Tensor& gb = t.grad_slot(bid);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
        }
        if (t.needs(xid)) {
          Tensor& gx = t.grad_slot(xid);
          std::vector<Real> dxhat(d);
          for (std::size_t r = 0; r < n; ++r) {
            Real mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              dxhat[c] = g(r, c) * gv[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * xhat(r, c);
            }
            mean_d /= static_cast<Real>(d);
            mean_dx /= static_cast<Real>(d);
            for (std::size_t c = 0; c < d; ++c)
              gx(r, c) += inv_std[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
          }
        }
      });
}

Var dropout(Var x, Real rate, std::uint64_t seed, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
  const Tensor& xv = x.value();
  Tensor mask(xv.rows(), xv.cols());
  const Real keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = to_unit(mix64(seed + i)) >= rate ? keep_scale : 0.0;
  return mul(x, x.tape->constant(std::move(mask)));
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  Real s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  const std::size_t xid = x.id;
  return x.tape->push(Tensor::scalar(s), "sum", {xid}, [xid](Tape& t, std::size_t self) {
    const Real g = t.out_grad(self)[0];
    Tensor& gx = t.grad_slot(xid);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<Real>(n));
}

Var mean_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  if (n == 0) throw std::invalid_argument("mean_rows of empty tensor");
  Tensor out(1, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[c] += xv(r, c);
  for (std::size_t c = 0; c < d; ++c) out[c] /= static_cast<Real>(n);
  const std::size_t xid = x.id;
  return x.tape->push(std::move(out), "mean_rows", {xid}, [xid](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    Tensor& gx = t.grad_slot(xid);
    const Real inv = 1.0 / static_cast<Real>(gx.rows());
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += g[c] * inv;
  });
}

Var softmax_cross_entropy(Var logits, const Tensor& target) {
  const Tensor& z = logits.value();
  if (!z.same_shape(target)) {
    throw std::invalid_argument("softmax_cross_entropy: logits " + z.shape_string() + " vs target " +
                                target.shape_string());
  }
  const std::size_t n = z.rows(), c = z.cols();
  if (n == 0) throw std::invalid_argument("softmax_cross_entropy: no rows");
  Tensor prob(n, c);
  Real loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    Real mx = z(r, 0);
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, z(r, k));
    Real se = 0.0;
    for (std::size_t k = 0; k < c; ++k) se += std::exp(z(r, k) - mx);
    const Real lse = mx + std::log(se);
    for (std::size_t k = 0; k < c; ++k) {
      prob(r, k) = std::exp(z(r, k) - lse);
      loss -= target(r, k) * (z(r, k) - lse);
    }
  }
  loss /= static_cast<Real>(n);
  const std::size_t zid = logits.id;
  return logits.tape->push(
      Tensor::scalar(loss), "softmax_cross_entropy", {zid},
      [zid, prob = std::move(prob), target](Tape& t, std::size_t self) {
        const Real g = t.out_grad(self)[0] / static_cast<Real>(prob.rows());
        Tensor& gz = t.grad_slot(zid);
        for (std::size_t r = 0; r < prob.rows(); ++r) {
          Real tsum = 0.0;
          for (std::size_t k = 0; k < prob.cols(); ++k) tsum += target(r, k);
          for (std::size_t k = 0; k < prob.cols(); ++k)
            gz(r, k) += g * (tsum * prob(r, k) - target(r, k));
        }
      });
}

Var bce_with_logits(Var logits, const Tensor& targets, const Tensor& mask) {
  const Tensor& z = logits.value();
  if (!z.same_shape(targets) || !z.same_shape(mask)) {
    throw std::invalid_argument("bce_with_logits: shape mismatch " + z.shape_string() + ", " +
                                targets.shape_string() + ", " + mask.shape_string());
  }
  std::size_t count = 0;
  Real loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i] == 0.0) continue;
    ++count;
    loss += std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  if (count == 0) return logits.tape->constant(Tensor::scalar(0.0));
  loss /= static_cast<Real>(count);
  const std::size_t zid = logits.id;
  return logits.tape->push(Tensor::scalar(loss), "bce_with_logits", {zid},
                           [zid, targets, mask, count](Tape& t, std::size_t self) {
                             const Real g = t.out_grad(self)[0] / static_cast<Real>(count);
                             const Tensor& z = t.value(Var{&t, zid});
                             Tensor& gz = t.grad_slot(zid);
                             for (std::size_t i = 0; i < z.size(); ++i) {
                               if (mask[i] == 0.0) continue;
                               const Real s = 1.0 / (1.0 + std::exp(-z[i]));
                               gz[i] += g * (s - targets[i]);
                             }
                           });
}

}  // namespace geognn
