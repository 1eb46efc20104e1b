// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "radbev/errors.hpp"

namespace radbev {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor*>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (Tensor* p : params) leaves.push_back(tape.constant(*p));
  const double v = f(tape, leaves).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckReport compare(const ScalarFn& f, const std::vector<Tensor*>& params,
                        const std::vector<Tensor>& analytic, const GradCheckOptions& options);

GradCheckReport grad_check_report(const ScalarFn& f, const std::vector<Tensor*>& params,
                                  const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (Tensor* p : params) leaves.push_back(tape.leaf(*p));
    Var out = f(tape, leaves);
    if (!std::isfinite(out.value().item())) throw NumericError("grad_check: non-finite function value");
    tape.backward(out);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor* g = tape.grad_if_any(leaves[i]);
      analytic.push_back(g ? *g : Tensor::like(*params[i]));
    }
  }
  return compare(f, params, analytic, options);
}

GradCheckReport compare(const ScalarFn& f, const std::vector<Tensor*>& params,
                        const std::vector<Tensor>& analytic, const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw NumericError("grad_check: eps must be positive");
  GradCheckReport report;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    Tensor& p = *params[ti];
    const std::size_t n = p.size();
    std::size_t stride = 1;
    if (options.max_elements_per_tensor > 0 && n > options.max_elements_per_tensor) {
      stride = (n + options.max_elements_per_tensor - 1) / options.max_elements_per_tensor;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p[i];
      p[i] = saved + options.eps;
      const double fp = evaluate(f, params);
      p[i] = saved - options.eps;
      const double fm = evaluate(f, params);
      p[i] = saved;

      const double num = (fp - fm) / (2.0 * options.eps);
      const double ana = analytic[ti][i];
      if (!std::isfinite(ana)) throw NumericError("grad_check: non-finite analytic gradient");
      const double denom = std::max({std::abs(ana), std::abs(num), options.floor});
      const double err = std::abs(ana - num) / denom;
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_tensor = ti;
        report.worst_index = i;
        report.analytic = ana;
        report.numeric = num;
      }
    }
  }
  return report;
}

GradCheckReport grad_check_params(const ParamFn& f, const std::vector<Parameter*>& params,
                                  const GradCheckOptions& options) {
  std::vector<Tensor*> values;
  for (Parameter* p : params) {
    p->zero_grad();
    values.push_back(&p->value);
  }
  {
    Tape tape;
    Var out = f(tape);
    if (!std::isfinite(out.value().item())) throw NumericError("grad_check: non-finite function value");
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);
  // The leaves handed to the wrapped function are unused: f reads the
  // perturbed parameter values directly.
  const ScalarFn wrapped = [&f](Tape& tape, const std::vector<Var>&) { return f(tape); };
  return compare(wrapped, values, analytic, options);
}

double grad_check(const ScalarFn& f, const std::vector<Tensor*>& params, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return grad_check_report(f, params, options).max_rel_error;
}

}  // namespace radbev
