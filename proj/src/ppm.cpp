#include "gmrfglm/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gmrfglm {

Contrast parse_contrast(const std::string &text) {
  const auto first = text.find(':');
  const auto last = text.rfind(':');
  if (first == std::string::npos || first == last)
    throw Error("contrast: expected name:w1,...,wK:gamma");
  Contrast c;
  c.name = text.substr(0, first);
  std::string weights = text.substr(first + 1, last - first - 1);
  std::string gamma = text.substr(last + 1);
  if (c.name.empty())
    throw Error("contrast: empty name");
  std::vector<double> w;
  std::stringstream ws(weights);
  std::string item;
  try {
    while (std::getline(ws, item, ','))
      w.push_back(std::stod(item));
    if (!gamma.empty() && gamma.back() == '%') {
      c.percent = true;
      gamma.pop_back();
    }
    c.gamma = std::stod(gamma);
  } catch (const std::logic_error &) {
    throw Error("contrast: cannot parse '" + text + "'");
  }
  if (w.empty())
    throw Error("contrast: no weights");
  c.c = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
  if ((c.c.array() == 0.0).all())
    throw Error("contrast: weights must not all be zero");
  if (!std::isfinite(c.gamma))
    throw Error("contrast: threshold must be finite");
  return c;
}

PpmMap marginal_ppm_mcmc(const Eigen::MatrixXd &draws, double gamma) {
  if (draws.rows() == 0)
    throw Error("marginal_ppm_mcmc: no draws");
  PpmMap m;
  m.method = "mcmc";
  m.draws = draws.rows();
  m.gamma = gamma;
  m.prob = (draws.array() > gamma).cast<double>().colwise().mean().transpose();
  return m;
}

PpmMap marginal_ppm_mcmc(const PosteriorChain &chain, int contrast_index, double grand_mean) {
  if (contrast_index < 0 || contrast_index >= static_cast<int>(chain.contrasts.size()))
    throw Error("marginal_ppm_mcmc: contrast index out of range");
  const Contrast &c = chain.contrasts[contrast_index];
  PpmMap m = marginal_ppm_mcmc(chain.contrast_samples[contrast_index], c.threshold(grand_mean));
  m.contrast = c.name;
  return m;
}

PpmMap marginal_ppm_svb(const Eigen::VectorXd &mean, const Eigen::VectorXd &var, double gamma,
                        long draws) {
  if (mean.size() != var.size())
    throw Error("marginal_ppm_svb: size mismatch");
  PpmMap m;
  m.method = "svb";
  m.draws = draws;
  m.gamma = gamma;
  m.prob.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (var[i] > 0.0)
      m.prob[i] = 0.5 * std::erfc(-(mean[i] - gamma) / std::sqrt(2.0 * var[i]));
    else
      m.prob[i] = mean[i] > gamma ? 1.0 : 0.0;
  }
  return m;
}

PpmMap marginal_ppm_svb(const std::vector<Eigen::MatrixXd> &w_samples, const Contrast &contrast,
                        double grand_mean) {
  const MarginalStats ms = svb_marginal_stats(w_samples, {contrast});
  PpmMap m = marginal_ppm_svb(ms.contrast_mean.row(0).transpose(),
                              ms.contrast_var.row(0).transpose(), contrast.threshold(grand_mean),
                              static_cast<long>(w_samples.size()));
  m.contrast = contrast.name;
  return m;
}

double joint_ppm(const Eigen::MatrixXd &draws, double gamma, const std::vector<int> &set) {
  if (set.empty())
    throw Error("joint_ppm: empty voxel set");
  if (draws.rows() == 0)
    throw Error("joint_ppm: no draws");
  for (int v : set)
    if (v < 0 || v >= draws.cols())
      throw Error("joint_ppm: voxel index out of range");
  long hits = 0;
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    bool all = true;
    for (int v : set)
      if (!(draws(d, v) > gamma)) {
        all = false;
        break;
      }
    hits += all;
  }
  return static_cast<double>(hits) / static_cast<double>(draws.rows());
}

std::vector<int> excursion_set_greedy(const Eigen::MatrixXd &draws, double gamma, double level,
                                      const std::vector<int> &domain) {
  if (!(level > 0.0 && level < 1.0))
    throw Error("excursion_set_greedy: level must be in (0, 1)");
  if (draws.rows() == 0)
    throw Error("excursion_set_greedy: no draws");
  std::vector<int> cand = domain;
  if (cand.empty()) {
    cand.resize(draws.cols());
    std::iota(cand.begin(), cand.end(), 0);
  }
  const Eigen::VectorXd marg = marginal_ppm_mcmc(draws, gamma).prob;
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return marg[a] > marg[b]; });

  const long nd = draws.rows();
  std::vector<char> alive(nd, 1);
  std::vector<int> set;
  for (int v : cand) {
    long next = 0;
    for (long d = 0; d < nd; ++d)
      next += alive[d] && draws(d, v) > gamma;
    if (static_cast<double>(next) / static_cast<double>(nd) < level)
      break;
    for (long d = 0; d < nd; ++d)
      alive[d] = alive[d] && draws(d, v) > gamma;
    set.push_back(v);
  }
  return set;
}

std::vector<std::uint8_t> threshold_map(const PpmMap &ppm, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0))
    throw Error("threshold_map: cutoff must be in (0, 1)");
  std::vector<std::uint8_t> out(ppm.prob.size());
  for (Eigen::Index i = 0; i < ppm.prob.size(); ++i)
    out[i] = ppm.prob[i] > cutoff ? 1 : 0;
  return out;
}

} // namespace gmrfglm
