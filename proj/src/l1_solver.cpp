#include "mimq/l1_solver.hpp"

#include "mimq/errors.hpp"

#include <cmath>
#include <cstdio>

namespace mimq {

namespace {

Vector least_squares(const Matrix& phi, const Vector& y) {
  Matrix g = phi.transpose() * phi;
  g.diagonal().array() += 1e-10 * std::max(1.0, g.diagonal().maxCoeff());
  Eigen::LDLT<Matrix> ldlt(g);
  return ldlt.solve(phi.transpose() * y);
}

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

std::string format_iteration(int it, double primal, double dual, double rp, double rd, double mu) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "iter %3d  primal %.10e  dual %.10e  |rp| %.2e  |rd| %.2e  mu %.2e", it, primal,
                dual, rp, rd, mu);
  return buf;
}

// Mehrotra predictor-corrector on the dual LP: max y.a  s.t.  phi^T a = phi^T 1 / 2,  0 <= a <= 1.
L1Solution interior_point(const Matrix& phi, const Vector& y, const L1SolverOptions& opt) {
  const Index n = phi.rows(), p = phi.cols();
  const double nn = static_cast<double>(n);
  const Vector b = 0.5 * phi.transpose() * Vector::Ones(n);
  Vector a = Vector::Constant(n, 0.5), s = Vector::Constant(n, 0.5);
  Vector beta = least_squares(phi, y);
  Vector r = y - phi * beta;
  const double theta = 1e-2 * r.cwiseAbs().mean() + 1e-8;
  Vector z = (-r).cwiseMax(0.0).array() + theta;
  Vector w = r.cwiseMax(0.0).array() + theta;
  const double ysum = y.sum();
  const double scale_b = 1 + b.cwiseAbs().maxCoeff(), scale_y = 1 + y.cwiseAbs().maxCoeff();

  L1Solution sol;
  Vector q(n), dinv(n), da(n), dz(n), dw(n), dbeta(p);
  Matrix m(p, p), scaled(n, p);
  Eigen::LLT<Matrix> llt;

  auto solve = [&](const Vector& rp, const Vector& rd, const Vector& raz, const Vector& rsw) {
    const Vector rv = rd.array() + raz.array() / a.array() - rsw.array() / s.array();
    dbeta = llt.solve(phi.transpose() * rv.cwiseProduct(dinv) - rp);
    da = (rv - phi * dbeta).cwiseProduct(dinv);
    dz = (raz.array() - z.array() * da.array()) / a.array();
    dw = (rsw.array() + w.array() * da.array()) / s.array();
  };

  for (int it = 0; it <= opt.max_iterations; ++it) {
    const Vector rp = b - phi.transpose() * a;
    const Vector rd = y - phi * beta + z - w;
    const double gap = a.dot(z) + s.dot(w);
    const double mu = gap / (2 * nn);
    sol.objective = (y - phi * beta).cwiseAbs().sum();
    sol.dual_objective = 2 * y.dot(a) - ysum;
    const double rp_norm = rp.cwiseAbs().maxCoeff(), rd_norm = rd.cwiseAbs().maxCoeff();
    sol.log.push_back(format_iteration(it, sol.objective, sol.dual_objective, rp_norm, rd_norm, mu));
    sol.iterations = it;
    if (rp_norm <= opt.tolerance * scale_b && rd_norm <= opt.tolerance * scale_y &&
        sol.objective - sol.dual_objective <= opt.tolerance * (1 + std::abs(sol.objective))) {
      sol.converged = true;
      break;
    }
    if (it == opt.max_iterations) break;

    q = z.array() / a.array() + w.array() / s.array();
    dinv = q.cwiseInverse();
    scaled = phi.array().colwise() * dinv.array().sqrt();
    m.setZero();
    m.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    llt.compute(m);
    if (llt.info() != Eigen::Success) {
      m.diagonal().array() += 1e-12 * std::max(1.0, m.diagonal().maxCoeff());
      llt.compute(m);
      if (llt.info() != Eigen::Success) break;
    }

    const Vector az = -a.cwiseProduct(z), sw = -s.cwiseProduct(w);
    solve(rp, rd, az, sw);
    const Vector ds_aff = -da;
    const double ap_aff = std::min(max_step(a, da), max_step(s, ds_aff));
    const double ad_aff = std::min(max_step(z, dz), max_step(w, dw));
    const double mu_aff = ((a + ap_aff * da).dot(z + ad_aff * dz) + (s + ap_aff * ds_aff).dot(w + ad_aff * dw)) /
                          (2 * nn);
    const double sigma = std::pow(mu_aff / mu, 3);
    const Vector raz = (sigma * mu + az.array() - da.array() * dz.array()).matrix();
    const Vector rsw = (sigma * mu + sw.array() - ds_aff.array() * dw.array()).matrix();
    solve(rp, rd, raz, rsw);

    const Vector ds = -da;
    const double ap = std::min(1.0, 0.99995 * std::min(max_step(a, da), max_step(s, ds)));
    const double ad = std::min(1.0, 0.99995 * std::min(max_step(z, dz), max_step(w, dw)));
    a += ap * da;
    s += ap * ds;
    beta += ad * dbeta;
    z += ad * dz;
    w += ad * dw;
  }
  sol.coefficients = beta;
  return sol;
}

L1Solution subgradient(const Matrix& phi, const Vector& y, const L1SolverOptions& opt) {
  L1Solution sol;
  Vector c = least_squares(phi, y);
  Vector best = c;
  double best_obj = (y - phi * c).cwiseAbs().sum();
  const double step0 = 1 + c.norm();
  for (int t = 1; t <= opt.subgradient_iterations; ++t) {
    const Vector r = phi * c - y;
    const Vector g = phi.transpose() * r.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    const double gn = g.norm();
    if (gn == 0) break;
    c -= (step0 / std::sqrt(static_cast<double>(t))) / gn * g;
    const double obj = (y - phi * c).cwiseAbs().sum();
    if (obj < best_obj) {
      best_obj = obj;
      best = c;
    }
    sol.iterations = t;
  }
  sol.coefficients = best;
  sol.objective = best_obj;
  sol.dual_objective = -std::numeric_limits<double>::infinity();
  sol.converged = true;
  sol.log.push_back("subgradient: best objective " + std::to_string(best_obj));
  return sol;
}

}  // namespace

L1Solution solve_l1(const Matrix& phi, const Vector& y, const L1SolverOptions& options) {
  if (phi.rows() != y.size()) throw DimensionError("solve_l1: design and label sizes differ");
  if (phi.rows() == 0) throw ParameterError("solve_l1: no data");
  if (!phi.allFinite() || !y.allFinite()) throw NumericError("solve_l1: non-finite input");
  if (options.method == L1Method::subgradient) return subgradient(phi, y, options);
  L1Solution sol = interior_point(phi, y, options);
  if (!sol.converged) {
    std::string log;
    for (const auto& line : sol.log) log += "\n  " + line;
    throw NumericError("solve_l1: interior point did not converge in " + std::to_string(sol.iterations) +
                       " iterations" + log);
  }
  return sol;
}

}  // namespace mimq
