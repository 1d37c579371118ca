#include "adtcurve/spatial.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "adtcurve/common.hpp"
#include "adtcurve/copula.hpp"
#include "adtcurve/rng.hpp"

namespace adt {

ResidualSummary compute_residuals(const PanelDataset& panel, const PseudoOutcomes& pseudo,
                                  const LlkrFit& xi_fit) {
  ResidualSummary out;
  const std::size_t n_sites = panel.n_sites();
  out.site_mean.assign(n_sites, 0.0);
  out.site_obs.assign(n_sites, 0);

  // Dose is static per site, so Psi_D(D_it) needs one solve per site.
  std::vector<double> psi_d_at_site(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i)
    psi_d_at_site[i] = xi_fit.predict(panel.dose[i]);

  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    if (!panel.is_post(r)) continue;
    int site = panel.obs_site[r];
    double resid = pseudo.xi[r] - psi_d_at_site[site];
    out.residuals.push_back(resid);
    out.site_mean[site] += resid;
    out.site_obs[site] += 1;
  }
  for (std::size_t i = 0; i < n_sites; ++i) {
    if (out.site_obs[i] == 0)
      throw DataError("site " + panel.site_ids[i] + " has no post-period rows");
    out.site_mean[i] /= static_cast<double>(out.site_obs[i]);
  }
  return out;
}

SpatialWeightModel SpatialWeightModel::from_correlation(const CorrelationModel& model,
                                                        const Eigen::MatrixXd& distances) {
  const Eigen::Index n = distances.rows();
  SpatialWeightModel out;
  out.sigma_target.resize(n, n);
  out.sigma_star.resize(n, n);
  const ExponentialCopulaMap& map = ExponentialCopulaMap::instance();
  for (Eigen::Index i = 0; i < n; ++i) {
    out.sigma_target(i, i) = 1.0;
    out.sigma_star(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double rho = model.corr(distances(i, j));
      // comonotone pairs (coincident sites) stay exactly comonotone
      double star = rho >= 1.0 ? 1.0 : map.rho_star(std::clamp(rho, 0.0, 0.9999));
      rho = std::clamp(rho, 0.0, 1.0);
      out.sigma_target(i, j) = rho;
      out.sigma_target(j, i) = rho;
      out.sigma_star(i, j) = star;
      out.sigma_star(j, i) = star;
    }
  }

  // Entrywise inversion can break joint positive-definiteness: clip the
  // spectrum, reconstruct, and rescale to a unit diagonal.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.sigma_star);
  if (eig.info() != Eigen::Success)
    throw NumericError("eigendecomposition of the equivalent correlation failed");
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(1e-8);
  Eigen::MatrixXd repaired =
      eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd d_inv = repaired.diagonal().cwiseSqrt().cwiseInverse();
  out.sigma_star = d_inv.asDiagonal() * repaired * d_inv.asDiagonal();

  Eigen::LLT<Eigen::MatrixXd> llt(out.sigma_star);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = out.sigma_star;
    jittered.diagonal().array() += 1e-10;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw NumericError("Cholesky of the equivalent correlation failed after repair");
  }
  out.chol_lower = llt.matrixL();
  return out;
}

SpatialWeightModel SpatialWeightModel::iid(std::size_t n_sites) {
  SpatialWeightModel out;
  out.identity = true;
  out.sigma_target = Eigen::MatrixXd::Identity(n_sites, n_sites);
  out.sigma_star = out.sigma_target;
  out.chol_lower = out.sigma_target;
  return out;
}

std::vector<double> SpatialWeightModel::sample_site_weights(std::uint64_t master_seed,
                                                            std::uint64_t replicate) const {
  const Eigen::Index n = sigma_star.rows();
  std::mt19937_64 rng = make_engine(master_seed, salt::kBootWeights, replicate);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  Eigen::VectorXd correlated = identity ? z : Eigen::VectorXd(chol_lower * z);

  std::vector<double> weights(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    // F_Exp^{-1}(Phi(z)), Exponential mean 1
    weights[static_cast<std::size_t>(i)] =
        -std::log(0.5 * std::erfc(correlated(i) / std::numbers::sqrt2));
  }
  return weights;
}

}  // namespace adt
