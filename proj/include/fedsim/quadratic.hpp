#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fedsim {

// Client objective F(x) = 1/2 x'Ax + b'x + c with exact gradient A x + b.
// Scalar-generic so the analytical pieces can run in any precision; the
// simulators instantiate double.
template <typename Scalar>
struct Quadratic {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat A;
  Vec b;
  Scalar c{0};

  Eigen::Index dim() const { return b.size(); }

  bool symmetric(Scalar rel_tol = Scalar(1e-12)) const {
    const Scalar scale = A.template lpNorm<Eigen::Infinity>();
    return (A - A.transpose()).template lpNorm<Eigen::Infinity>() <=
           rel_tol * (scale > Scalar(0) ? scale : Scalar(1));
  }
};

using Quadraticd = Quadratic<double>;

template <typename Scalar, typename Derived>
Scalar value(const Quadratic<Scalar>& f, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != f.dim()) throw std::invalid_argument("quadratic: dimension mismatch");
  return Scalar(0.5) * x.dot(f.A * x) + f.b.dot(x) + f.c;
}

template <typename Scalar, typename Derived>
typename Quadratic<Scalar>::Vec grad(const Quadratic<Scalar>& f,
                                     const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != f.dim()) throw std::invalid_argument("quadratic: dimension mismatch");
  return f.A * x + f.b;
}

// A population of clients; the global objective is their unweighted mean.
template <typename Scalar>
struct Federation {
  std::vector<Quadratic<Scalar>> clients;

  int size() const { return static_cast<int>(clients.size()); }
  Eigen::Index dim() const { return clients.empty() ? 0 : clients.front().dim(); }
};

using Federationd = Federation<double>;

template <typename Scalar>
Quadratic<Scalar> global_objective(const Federation<Scalar>& fed) {
  if (fed.clients.empty()) throw std::invalid_argument("federation: empty");
  Quadratic<Scalar> g;
  g.A = fed.clients.front().A;
  g.b = fed.clients.front().b;
  g.c = fed.clients.front().c;
  for (std::size_t m = 1; m < fed.clients.size(); ++m) {
    if (fed.clients[m].dim() != g.b.size())
      throw std::invalid_argument("federation: mixed dimensions");
    g.A += fed.clients[m].A;
    g.b += fed.clients[m].b;
    g.c += fed.clients[m].c;
  }
  const Scalar inv = Scalar(1) / Scalar(fed.size());
  g.A *= inv;
  g.b *= inv;
  g.c *= inv;
  return g;
}

// Solves mean(A) x = -mean(b). Requires a positive definite mean curvature;
// clients may individually be non-convex (their mean still has to be PD).
template <typename Scalar>
typename Quadratic<Scalar>::Vec global_minimizer(const Federation<Scalar>& fed) {
  const Quadratic<Scalar> g = global_objective(fed);
  Eigen::SelfAdjointEigenSolver<typename Quadratic<Scalar>::Mat> es(g.A);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= Scalar(0))
    throw std::domain_error("no unique minimizer: mean curvature not positive definite");
  return es.eigenvectors() *
         (es.eigenvalues().cwiseInverse().asDiagonal() *
          (es.eigenvectors().transpose() * (-g.b)));
}

template <typename Scalar>
struct HeterogeneityReport {
  Scalar zeta_star_sq;   // mean squared client-gradient norm at the global minimizer
  Scalar delta;          // max spectral deviation of a client curvature from the mean
  Scalar zeta_sq_fit;    // smallest zeta^2 certifying the gradient-diversity bound at beta=0
  Scalar beta_sq_fit;    // fitted beta^2 (0: equal-curvature diversity is x-independent)
  Scalar mu;             // smallest eigenvalue of the mean curvature, clipped at 0
  Scalar L;              // largest client curvature eigenvalue
  Scalar min_client_eig; // smallest eigenvalue over all clients (convexity witness)
  bool all_clients_convex;
};

// zeta_sq_fit is exact when all curvatures match (the gradient spread is then
// constant in x); otherwise it is the max over the sample box, a certificate
// for that box only.
template <typename Scalar>
HeterogeneityReport<Scalar> heterogeneity(
    const Federation<Scalar>& fed,
    const std::vector<typename Quadratic<Scalar>::Vec>& sample_points = {}) {
  using Vec = typename Quadratic<Scalar>::Vec;
  HeterogeneityReport<Scalar> rep{};
  const Quadratic<Scalar> g = global_objective(fed);
  const Vec xstar = global_minimizer(fed);

  Scalar zs = 0;
  for (const auto& cl : fed.clients) zs += grad(cl, xstar).squaredNorm();
  rep.zeta_star_sq = zs / Scalar(fed.size());

  Eigen::SelfAdjointEigenSolver<typename Quadratic<Scalar>::Mat> ges(g.A);
  rep.mu = std::max(Scalar(0), ges.eigenvalues().minCoeff());

  rep.delta = 0;
  rep.L = 0;
  rep.min_client_eig = std::numeric_limits<Scalar>::infinity();
  for (const auto& cl : fed.clients) {
    Eigen::SelfAdjointEigenSolver<typename Quadratic<Scalar>::Mat> es(cl.A);
    rep.L = std::max(rep.L, es.eigenvalues().cwiseAbs().maxCoeff());
    rep.min_client_eig = std::min(rep.min_client_eig, es.eigenvalues().minCoeff());
    Eigen::SelfAdjointEigenSolver<typename Quadratic<Scalar>::Mat> ds(cl.A - g.A);
    rep.delta = std::max(rep.delta, ds.eigenvalues().cwiseAbs().maxCoeff());
  }
  rep.all_clients_convex = rep.min_client_eig >= Scalar(-1e-12);

  rep.beta_sq_fit = 0;
  rep.zeta_sq_fit = 0;
  std::vector<Vec> pts = sample_points;
  if (pts.empty()) pts.push_back(xstar);
  for (const auto& x : pts) {
    const Vec gg = grad(g, x);
    Scalar spread = 0;
    for (const auto& cl : fed.clients) spread += (grad(cl, x) - gg).squaredNorm();
    rep.zeta_sq_fit = std::max(rep.zeta_sq_fit, spread / Scalar(fed.size()));
  }
  return rep;
}

// Max residual of mean_m ||grad_m - grad||^2 - (beta_sq ||grad||^2 + zeta_sq)
// over the sample points; <= 0 certifies the pair on that sample.
template <typename Scalar>
Scalar verify_gradient_diversity(
    const Federation<Scalar>& fed, Scalar beta_sq, Scalar zeta_sq,
    const std::vector<typename Quadratic<Scalar>::Vec>& sample_points) {
  if (sample_points.empty()) throw std::invalid_argument("diversity check: no sample points");
  const Quadratic<Scalar> g = global_objective(fed);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (const auto& x : sample_points) {
    const auto gg = grad(g, x);
    Scalar lhs = 0;
    for (const auto& cl : fed.clients) lhs += (grad(cl, x) - gg).squaredNorm();
    lhs /= Scalar(fed.size());
    worst = std::max(worst, lhs - beta_sq * gg.squaredNorm() - zeta_sq);
  }
  return worst;
}

}  // namespace fedsim
