#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mornmt/tensor.hpp"

namespace mornmt {

// Trainable value: gradient always allocated, same shape, accumulated (+=)
// by backward passes until explicitly zeroed.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape)) {}
};

// Ordered registry of parameters. Registration order is the manifest order
// used by checkpoints, so it must be deterministic.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_elements() const;
  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reverse-mode tape. Operations append nodes in topological order; backward
// zeroes the per-node accumulators, seeds the loss with 1 and sweeps the
// records in reverse, adding into Parameter::grad at the leaves. Running
// backward twice therefore doubles every parameter gradient.
//
// Parameter nodes reference the parameter's value in place, so the owning
// ParameterSet must outlive the tape.
class Tape {
 public:
  struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var leaf(Tensor v);
  Var param(Parameter& p);
  Var zeros(Shape s) { return leaf(Tensor::zeros(std::move(s))); }
  Var ones(Shape s) { return leaf(Tensor::filled(std::move(s), 1.0)); }

  // Fixed op set: the minimal closure over GRU cells, additive attention,
  // softmax readouts and cross-entropy losses.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  Var concat(std::span<const Var> xs);  // last (only) axis of rank-1 vectors
  Var concat(Var a, Var b);
  Var slice(Var a, std::size_t lo, std::size_t hi);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);
  Var mul(Var a, Var b);  // pointwise
  Var gather_row(Var matrix, std::size_t row);
  Var cross_entropy(Var logits, std::size_t target);
  // Zero-cost view: same data, new shape, identity gradient.
  Var reshape(Var a, Shape s);
  // Elementwise map with caller-supplied derivative dy/dx(x, y). Exists so
  // tests can exercise the checker against a corrupted gradient rule.
  Var custom_unary(Var a, double (*f)(double), double (*df)(double x, double y));

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;  // meaningful after backward()

  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;  // set for parameter nodes
    Parameter* par = nullptr;
    std::function<void()> back;
  };

  const Tensor& val(int i) const { return nodes_[i].ref ? *nodes_[i].ref : nodes_[i].owned; }
  Tensor& ensure_grad(int i);
  int push(Tensor value);
  Var check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Central-difference gradient verification. `build` must deterministically
// construct a scalar loss from the current parameter values; two baseline
// evaluations are compared to reject non-deterministic builders. Relative
// error uses max(1e-8, |analytic| + |numeric|) as denominator.
struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double worst = 0.0;
};

GradCheckReport finite_diff_check(ParameterSet& params,
                                  const std::function<Tape::Var(Tape&)>& build, double epsilon);

}  // namespace mornmt
