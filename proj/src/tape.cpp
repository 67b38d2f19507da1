#include "mornmt/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mornmt {

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  index_[params_.back()->name] = params_.size() - 1;
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grads() {
  for (auto& p : params_) p->grad.fill(0.0);
}

int Tape::push(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, nullptr, nullptr});
  grads_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

Tape::Var Tape::check(Var v) const {
  if (!v.valid() || v.i >= static_cast<int>(nodes_.size()))
    throw std::logic_error("tape: invalid variable handle");
  return v;
}

Tensor& Tape::ensure_grad(int i) {
  if (grads_[i].empty()) grads_[i] = Tensor::zeros(val(i).shape);
  return grads_[i];
}

const Tensor& Tape::value(Var v) const { return val(check(v).i); }

const Tensor& Tape::grad(Var v) const {
  check(v);
  static const Tensor kEmpty;
  return grads_[v.i].empty() ? kEmpty : grads_[v.i];
}

Tape::Var Tape::leaf(Tensor v) { return Var{push(std::move(v))}; }

Tape::Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{Tensor{}, &p.value, &p, nullptr});
  grads_.emplace_back();
  int i = static_cast<int>(nodes_.size()) - 1;
  nodes_[i].back = [this, i] {
    Parameter& par = *nodes_[i].par;
    const Tensor& g = grads_[i];
    for (std::size_t k = 0; k < g.size(); ++k) par.grad.data[k] += g.data[k];
  };
  return Var{i};
}

Tape::Var Tape::matmul(Var av, Var bv) {
  check(av);
  check(bv);
  const Tensor& a = val(av.i);
  const Tensor& b = val(bv.i);
  const auto mismatch = [&] {
    return std::invalid_argument("matmul shape mismatch: " + shape_str(a.shape) + " vs " +
                                 shape_str(b.shape));
  };

  Tensor out;
  if (a.rank() == 2 && b.rank() == 2) {
    if (a.cols() != b.rows()) throw mismatch();
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t t = 0; t < k; ++t) {
        const double aik = a.data[i * k + t];
        for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += aik * b.data[t * n + j];
      }
  } else if (a.rank() == 2 && b.rank() == 1) {
    if (a.cols() != b.size()) throw mismatch();
    const std::size_t m = a.rows(), k = a.cols();
    out = Tensor::zeros({m});
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a.data[i * k + t] * b.data[t];
      out.data[i] = s;
    }
  } else if (a.rank() == 1 && b.rank() == 2) {
    if (a.size() != b.rows()) throw mismatch();
    const std::size_t k = a.size(), n = b.cols();
    out = Tensor::zeros({n});
    for (std::size_t t = 0; t < k; ++t) {
      const double at = a.data[t];
      for (std::size_t j = 0; j < n; ++j) out.data[j] += at * b.data[t * n + j];
    }
  } else {
    throw mismatch();
  }

  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, bi = bv.i] {
    const Tensor& g = grads_[i];
    const Tensor& a = val(ai);
    const Tensor& b = val(bi);
    Tensor& ga = ensure_grad(ai);
    Tensor& gb = ensure_grad(bi);
    if (a.rank() == 2 && b.rank() == 2) {
      const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t t = 0; t < k; ++t) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g.data[r * n + j] * b.data[t * n + j];
          ga.data[r * k + t] += s;
        }
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t r = 0; r < m; ++r) s += a.data[r * k + t] * g.data[r * n + j];
          gb.data[t * n + j] += s;
        }
    } else if (a.rank() == 2 && b.rank() == 1) {
      const std::size_t m = a.rows(), k = a.cols();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t t = 0; t < k; ++t) ga.data[r * k + t] += g.data[r] * b.data[t];
      for (std::size_t t = 0; t < k; ++t) {
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += a.data[r * k + t] * g.data[r];
        gb.data[t] += s;
      }
    } else {
      const std::size_t k = a.size(), n = b.cols();
      for (std::size_t t = 0; t < k; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += b.data[t * n + j] * g.data[j];
        ga.data[t] += s;
      }
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) gb.data[t * n + j] += a.data[t] * g.data[j];
    }
  };
  return Var{i};
}

Tape::Var Tape::add(Var av, Var bv) {
  check(av);
  check(bv);
  const Tensor& a = val(av.i);
  const Tensor& b = val(bv.i);
  if (!a.same_shape(b))
    throw std::invalid_argument("add shape mismatch: " + shape_str(a.shape) + " vs " +
                                shape_str(b.shape));
  Tensor out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += b.data[k];
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, bi = bv.i] {
    const Tensor& g = grads_[i];
    Tensor& ga = ensure_grad(ai);
    Tensor& gb = ensure_grad(bi);
    for (std::size_t k = 0; k < g.size(); ++k) {
      ga.data[k] += g.data[k];
      gb.data[k] += g.data[k];
    }
  };
  return Var{i};
}

Tape::Var Tape::scale(Var av, double s) {
  check(av);
  Tensor out = val(av.i);
  for (double& x : out.data) x *= s;
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, s] {
    const Tensor& g = grads_[i];
    Tensor& ga = ensure_grad(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += s * g.data[k];
  };
  return Var{i};
}

Tape::Var Tape::concat(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("concat: empty operand list");
  std::size_t total = 0;
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (Var v : xs) {
    check(v);
    if (val(v.i).rank() != 1)
      throw std::invalid_argument("concat expects rank-1 operands, got " +
                                  shape_str(val(v.i).shape));
    total += val(v.i).size();
    ids.push_back(v.i);
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (int id : ids) {
    const Tensor& t = val(id);
    std::copy(t.data.begin(), t.data.end(), out.data.begin() + off);
    off += t.size();
  }
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ids] {
    const Tensor& g = grads_[i];
    std::size_t off = 0;
    for (int id : ids) {
      Tensor& ga = ensure_grad(id);
      for (std::size_t k = 0; k < ga.size(); ++k) ga.data[k] += g.data[off + k];
      off += ga.size();
    }
  };
  return Var{i};
}

Tape::Var Tape::concat(Var a, Var b) {
  const Var xs[2] = {a, b};
  return concat(std::span<const Var>(xs, 2));
}

Tape::Var Tape::slice(Var av, std::size_t lo, std::size_t hi) {
  check(av);
  const Tensor& a = val(av.i);
  if (a.rank() != 1 || lo >= hi || hi > a.size())
    throw std::invalid_argument("slice [" + std::to_string(lo) + "," + std::to_string(hi) +
                                ") invalid for " + shape_str(a.shape));
  Tensor out = Tensor::zeros({hi - lo});
  std::copy(a.data.begin() + lo, a.data.begin() + hi, out.data.begin());
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, lo] {
    const Tensor& g = grads_[i];
    Tensor& ga = ensure_grad(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[lo + k] += g.data[k];
  };
  return Var{i};
}

Tape::Var Tape::custom_unary(Var av, double (*f)(double), double (*df)(double, double)) {
  check(av);
  const Tensor& a = val(av.i);
  Tensor out = a;
  for (double& x : out.data) x = f(x);
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, df] {
    const Tensor& g = grads_[i];
    const Tensor& x = val(ai);
    const Tensor& y = val(i);
    Tensor& ga = ensure_grad(ai);
    for (std::size_t k = 0; k < g.size(); ++k)
      ga.data[k] += g.data[k] * df(x.data[k], y.data[k]);
  };
  return Var{i};
}

namespace {
double sigmoid_fwd(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double sigmoid_df(double, double y) { return y * (1.0 - y); }
double tanh_fwd(double x) { return std::tanh(x); }
double tanh_df(double, double y) { return 1.0 - y * y; }
}  // namespace

Tape::Var Tape::sigmoid(Var a) { return custom_unary(a, sigmoid_fwd, sigmoid_df); }
Tape::Var Tape::tanh(Var a) { return custom_unary(a, tanh_fwd, tanh_df); }

Tape::Var Tape::softmax(Var av) {
  check(av);
  const Tensor& a = val(av.i);
  if (a.rank() != 1 || a.size() == 0)
    throw std::invalid_argument("softmax expects a nonempty vector, got " + shape_str(a.shape));
  Tensor out = a;
  const double mx = *std::max_element(a.data.begin(), a.data.end());
  double sum = 0.0;
  for (double& x : out.data) {
    x = std::exp(x - mx);
    sum += x;
  }
  // exp underflow would emit exact zeros for extreme inputs; clamp keeps
  // every output strictly positive.
  for (double& x : out.data) x = std::max(x / sum, std::numeric_limits<double>::min());
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i] {
    const Tensor& g = grads_[i];
    const Tensor& y = val(i);
    Tensor& ga = ensure_grad(ai);
    double dot = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) dot += g.data[k] * y.data[k];
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += y.data[k] * (g.data[k] - dot);
  };
  return Var{i};
}

Tape::Var Tape::mul(Var av, Var bv) {
  check(av);
  check(bv);
  const Tensor& a = val(av.i);
  const Tensor& b = val(bv.i);
  if (!a.same_shape(b))
    throw std::invalid_argument("mul shape mismatch: " + shape_str(a.shape) + " vs " +
                                shape_str(b.shape));
  Tensor out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= b.data[k];
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i, bi = bv.i] {
    const Tensor& g = grads_[i];
    const Tensor& a = val(ai);
    const Tensor& b = val(bi);
    Tensor& ga = ensure_grad(ai);
    Tensor& gb = ensure_grad(bi);
    for (std::size_t k = 0; k < g.size(); ++k) {
      ga.data[k] += g.data[k] * b.data[k];
      gb.data[k] += g.data[k] * a.data[k];
    }
  };
  return Var{i};
}

Tape::Var Tape::gather_row(Var mv, std::size_t row) {
  check(mv);
  const Tensor& m = val(mv.i);
  if (m.rank() != 2 || row >= m.rows())
    throw std::invalid_argument("gather_row " + std::to_string(row) + " out of range for " +
                                shape_str(m.shape));
  const std::size_t d = m.cols();
  Tensor out = Tensor::zeros({d});
  std::copy(m.data.begin() + row * d, m.data.begin() + (row + 1) * d, out.data.begin());
  int i = push(std::move(out));
  nodes_[i].back = [this, i, mi = mv.i, row] {
    const Tensor& g = grads_[i];
    Tensor& gm = ensure_grad(mi);
    const std::size_t d = g.size();
    for (std::size_t k = 0; k < d; ++k) gm.data[row * d + k] += g.data[k];
  };
  return Var{i};
}

Tape::Var Tape::cross_entropy(Var lv, std::size_t target) {
  check(lv);
  const Tensor& x = val(lv.i);
  if (x.rank() != 1 || x.size() == 0)
    throw std::invalid_argument("cross_entropy expects a logits vector, got " +
                                shape_str(x.shape));
  if (target >= x.size())
    throw std::invalid_argument("cross_entropy target " + std::to_string(target) +
                                " out of range for " + shape_str(x.shape));
  const double mx = *std::max_element(x.data.begin(), x.data.end());
  double sum = 0.0;
  for (double v : x.data) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  Tensor out = Tensor::vec({lse - x.data[target]});
  int i = push(std::move(out));
  nodes_[i].back = [this, i, li = lv.i, target, mx, sum] {
    const double g0 = grads_[i].data[0];
    const Tensor& x = val(li);
    Tensor& gx = ensure_grad(li);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double p = std::exp(x.data[k] - mx) / sum;
      gx.data[k] += g0 * (p - (k == target ? 1.0 : 0.0));
    }
  };
  return Var{i};
}

Tape::Var Tape::reshape(Var av, Shape s) {
  check(av);
  const Tensor& a = val(av.i);
  if (shape_numel(s) != a.size())
    throw std::invalid_argument("reshape " + shape_str(a.shape) + " -> " + shape_str(s) +
                                " changes element count");
  Tensor out = a;
  out.shape = std::move(s);
  int i = push(std::move(out));
  nodes_[i].back = [this, i, ai = av.i] {
    const Tensor& g = grads_[i];
    Tensor& ga = ensure_grad(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
  };
  return Var{i};
}

void Tape::backward(Var loss) {
  check(loss);
  if (val(loss.i).size() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                shape_str(val(loss.i).shape));
  for (auto& g : grads_) g = Tensor{};
  ensure_grad(loss.i).data[0] = 1.0;
  for (int i = loss.i; i >= 0; --i) {
    if (!grads_[i].empty() && nodes_[i].back) nodes_[i].back();
  }
}

GradCheckReport finite_diff_check(ParameterSet& params,
                                  const std::function<Tape::Var(Tape&)>& build, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");

  const auto eval = [&] {
    Tape t;
    Tape::Var l = build(t);
    const Tensor& v = t.value(l);
    if (v.size() != 1) throw std::invalid_argument("finite_diff_check: loss must be scalar");
    return v.data[0];
  };

  const double base1 = eval();
  const double base2 = eval();
  if (base1 != base2)
    throw std::runtime_error("finite_diff_check: loss builder is not deterministic (" +
                             std::to_string(base1) + " vs " + std::to_string(base2) + ")");

  params.zero_grads();
  {
    Tape t;
    Tape::Var l = build(t);
    t.backward(l);
  }

  GradCheckReport report;
  for (auto& pp : params) {
    Parameter& p = *pp;
    if (!p.trainable) continue;
    GradCheckEntry entry{p.name, 0.0};
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double w = p.value.data[k];
      p.value.data[k] = w + epsilon;
      const double lp = eval();
      p.value.data[k] = w - epsilon;
      const double lm = eval();
      p.value.data[k] = w;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double analytic = p.grad.data[k];
      const double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(analytic - numeric) / denom);
    }
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace mornmt
