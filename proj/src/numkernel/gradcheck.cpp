#include "helprank/numkernel/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "helprank/numkernel/ops.hpp"
#include "helprank/numkernel/rng.hpp"

namespace helprank::numkernel {

namespace {

Var reduce(Var out, const GradCheckOptions& options) {
  if (options.reduction == Reduction::kSum) return sum_all(out);
  Rng rng(options.seed);
  Matrix w(out.rows(), out.cols());
  for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return weighted_sum(out, w);
}

double rel_error(double a, double n, double floor) {
  const double e = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
  return std::isnan(e) ? HUGE_VAL : e;
}

void note(GradCheckReport& report, double err, std::size_t k, std::size_t idx, std::size_t cols) {
  ++report.entries;
  if (report.entries == 1 || err > report.max_rel_error) {
    report.max_rel_error = err;
    report.worst = "input " + std::to_string(k) + " (" + std::to_string(idx / cols) + "," +
                   std::to_string(idx % cols) + ")";
  }
}

}  // namespace

GradCheckReport finite_difference_check(const InputFunction& op, std::vector<Matrix> inputs,
                                        double tol, const GradCheckOptions& options) {
  auto evaluate = [&](const std::vector<Matrix>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& x : xs) vars.push_back(tape.constant(x));
    return reduce(op(tape, vars), options).value()(0, 0);
  };

  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& x : inputs) vars.push_back(tape.input(x));
    Var y = reduce(op(tape, vars), options);
    tape.backward(y);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].data();
    for (std::size_t idx = 0; idx < data.size(); ++idx) {
      const double orig = data[idx];
      data[idx] = orig + options.step;
      const double plus = evaluate(inputs);
      data[idx] = orig - options.step;
      const double minus = evaluate(inputs);
      data[idx] = orig;
      const double numeric = (plus - minus) / (2.0 * options.step);
      note(report, rel_error(analytic[k].data()[idx], numeric, options.floor), k, idx,
           inputs[k].cols());
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

GradCheckReport finite_difference_check(const ParamFunction& op,
                                        const std::vector<Parameter*>& params, double tol,
                                        const GradCheckOptions& options) {
  auto evaluate = [&] {
    Tape tape;
    return reduce(op(tape), options).value()(0, 0);
  };

  std::vector<Matrix> saved;
  for (Parameter* p : params) {
    saved.push_back(p->grad);
    p->zero_grad();
  }
  {
    Tape tape;
    Var y = reduce(op(tape), options);
    tape.backward(y);
  }
  std::vector<Matrix> analytic;
  for (std::size_t k = 0; k < params.size(); ++k) {
    analytic.push_back(params[k]->grad);
    params[k]->grad = saved[k];
  }

  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k]->value.data();
    for (std::size_t idx = 0; idx < data.size(); ++idx) {
      const double orig = data[idx];
      data[idx] = orig + options.step;
      const double plus = evaluate();
      data[idx] = orig - options.step;
      const double minus = evaluate();
      data[idx] = orig;
      const double numeric = (plus - minus) / (2.0 * options.step);
      note(report, rel_error(analytic[k].data()[idx], numeric, options.floor), k, idx,
           params[k]->value.cols());
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace helprank::numkernel
