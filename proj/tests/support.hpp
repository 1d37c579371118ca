#pragma once

// Shared synthetic data builders for the test suites.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "adtcurve/panel.hpp"

namespace test_support {

struct PanelSpec {
  int n_sites = 40;
  int n_months = 24;
  int t0 = 13;
  unsigned seed = 7;
};

/// A small panel with one numeric covariate ("x1"), a static covariate
/// ("pop"), clustered coordinates and a random dose. Outcomes are zero unless
/// a filler is applied afterwards.
inline adt::PanelDataset make_panel(const PanelSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  adt::PanelDataset panel;
  panel.t0 = spec.t0;
  int n_prov = std::max(2, spec.n_sites / 12);
  for (int p = 0; p < n_prov; ++p)
    panel.province_levels.push_back("p" + std::to_string(p));

  std::vector<double> pop(spec.n_sites);
  for (int i = 0; i < spec.n_sites; ++i) {
    panel.site_ids.push_back("s" + std::to_string(i));
    panel.lon.push_back(100.0 + 8.0 * unit(rng));
    panel.lat.push_back(-3.0 + 6.0 * unit(rng));
    panel.province.push_back(i % n_prov);
    panel.raw_dose.push_back(std::exp(2.0 * normal(rng)));
    pop[i] = std::exp(1.0 + 0.5 * normal(rng));
  }
  panel.static_cov_names = {"pop"};
  panel.static_covs = {pop};

  panel.time_cov_names = {"x1"};
  panel.time_covs.resize(1);
  for (int i = 0; i < spec.n_sites; ++i) {
    for (int t = 1; t <= spec.n_months; ++t) {
      panel.obs_site.push_back(i);
      panel.obs_t.push_back(t);
      panel.y.push_back(0.0);
      panel.time_covs[0].push_back(normal(rng));
    }
  }
  panel.finalize();
  return panel;
}

/// y = f(site, t, x1, pop, dose, is_post)
template <typename F>
void fill_outcome(adt::PanelDataset& panel, F f) {
  for (std::size_t r = 0; r < panel.n_obs(); ++r) {
    int site = panel.obs_site[r];
    panel.y[r] = f(site, panel.obs_t[r], panel.time_covs[0][r],
                   panel.static_covs[0][site], panel.dose[site], panel.is_post(r));
  }
}

}  // namespace test_support
