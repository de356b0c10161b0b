#include "ifa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ifa/identify.hpp"
#include "ifa/irf.hpp"
#include "ifa/rng.hpp"

namespace ifa {
namespace {

constexpr std::uint64_t kItemStream = 0xffffffffffffffffULL;
constexpr std::uint64_t kThetaSubstream = 1;
constexpr std::uint64_t kResponseSubstream = 2;

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_open(rng); }

void check_finite_range(double lo, double hi, const char* what) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw std::invalid_argument(std::string("SimSpec: invalid ") + what + " range");
  }
}

int draw_category(const Eigen::VectorXd& probs, double u) {
  double cumulative = 0.0;
  for (Eigen::Index c = 0; c + 1 < probs.size(); ++c) {
    cumulative += probs[c];
    if (u < cumulative) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size()) - 1;
}

double column_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  const double denom = std::sqrt((x * x).sum() * (y * y).sum());
  return denom > 0 ? (x * y).sum() / denom : 0.0;
}

void check_pair(const PersonFactors& t1, const std::vector<ItemParams>& i1, const PersonFactors& t2,
                const std::vector<ItemParams>& i2) {
  if (t1.rows() != t2.rows() || i1.size() != i2.size()) {
    throw std::invalid_argument("recovery metrics: truth and fit differ in N or J");
  }
  for (std::size_t j = 0; j < i1.size(); ++j) {
    if (i1[j].categories() != i2[j].categories() || i1[j].kind != i2[j].kind) {
      throw std::invalid_argument("recovery metrics: item " + std::to_string(j) + " differs in kind or categories");
    }
    if (i1[j].factors() != t1.cols() || i2[j].factors() != t2.cols()) {
      throw std::invalid_argument("recovery metrics: loading length differs from theta columns");
    }
  }
}

}  // namespace

void SimSpec::validate() const {
  if (n < 1 || j < 1 || k < 1) throw std::invalid_argument("SimSpec: n, j and k must be positive");
  const int cats = kind == ModelKind::binary ? 2 : categories;
  if (cats < 2) throw std::invalid_argument("SimSpec: categories must be at least 2");
  require_supported(kind, link);
  check_finite_range(loading_low, loading_high, "loading");
  check_finite_range(intercept_low, intercept_high, "intercept");
  check_finite_range(threshold_low, threshold_high, "threshold");
  if (correlation.size() > 0) {
    if (correlation.rows() != k || correlation.cols() != k) {
      throw std::invalid_argument("SimSpec: correlation must be K x K");
    }
    FactorConfig check(correlation);
  }
  if (q && (q->n_items() != j || q->k() != k)) throw std::invalid_argument("SimSpec: Q-matrix must be J x K");
}

Simulation simulate(const SimSpec& spec) {
  spec.validate();
  const FactorConfig factors = spec.correlation.size() > 0 ? FactorConfig(spec.correlation) : FactorConfig(spec.k);
  Simulation sim;
  sim.correlation = factors.correlation();

  Rng item_rng = make_stream(spec.seed, kItemStream);
  sim.items.resize(static_cast<std::size_t>(spec.j));
  const int cats = spec.kind == ModelKind::binary ? 2 : spec.categories;
  for (int j = 0; j < spec.j; ++j) {
    ItemParams& item = sim.items[static_cast<std::size_t>(j)];
    item.kind = spec.kind;
    item.loadings = Eigen::VectorXd::Zero(spec.k);
    for (int f = 0; f < spec.k; ++f) {
      const double a = uniform(item_rng, spec.loading_low, spec.loading_high);
      if (!spec.q || spec.q->free(j, f)) item.loadings[f] = a;
    }
    item.intercepts.resize(cats - 1);
    if (spec.kind == ModelKind::binary) {
      item.intercepts[0] = uniform(item_rng, spec.intercept_low, spec.intercept_high);
    } else {
      for (int t = 0; t < cats - 1; ++t) item.intercepts[t] = uniform(item_rng, spec.threshold_low, spec.threshold_high);
      if (spec.kind == ModelKind::graded) {
        std::sort(item.intercepts.data(), item.intercepts.data() + item.intercepts.size());
      }
    }
  }

  sim.thetas.resize(spec.n, spec.k);
  for (int i = 0; i < spec.n; ++i) {
    Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(i), kThetaSubstream);
    Eigen::VectorXd z(spec.k);
    for (int f = 0; f < spec.k; ++f) z[f] = standard_normal(rng);
    sim.thetas.row(i) = (factors.cholesky() * z).transpose();
  }
  sim.data = simulate_responses(sim.thetas, sim.items, spec.link, spec.seed);
  return sim;
}

Dataset simulate_responses(const PersonFactors& thetas, const std::vector<ItemParams>& items, Link link,
                           std::uint64_t seed) {
  const auto n = thetas.rows();
  const auto j_count = static_cast<Eigen::Index>(items.size());
  std::vector<int> categories;
  for (const auto& item : items) {
    validate_item(item);
    require_supported(item.kind, link);
    if (item.factors() != thetas.cols()) throw std::invalid_argument("simulate_responses: loading length differs from K");
    categories.push_back(item.categories());
  }
  Eigen::MatrixXi y(n, j_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), kResponseSubstream);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      const ItemParams& item = items[static_cast<std::size_t>(j)];
      const Eigen::VectorXd probs = category_probabilities(item, thetas.row(i).dot(item.loadings), link);
      y(i, j) = draw_category(probs, uniform_open(rng));
    }
  }
  return Dataset(std::move(y), std::move(categories));
}

double prob_mse(const PersonFactors& true_thetas, const std::vector<ItemParams>& true_items,
                const PersonFactors& fitted_thetas, const std::vector<ItemParams>& fitted_items, Link link) {
  check_pair(true_thetas, true_items, fitted_thetas, fitted_items);
  double total = 0.0;
  double cells = 0.0;
  for (std::size_t j = 0; j < true_items.size(); ++j) {
    const ItemParams& a = true_items[j];
    const ItemParams& b = fitted_items[j];
    double item_total = 0.0;
    for (Eigen::Index i = 0; i < true_thetas.rows(); ++i) {
      const Eigen::VectorXd pa = category_probabilities(a, true_thetas.row(i).dot(a.loadings), link);
      const Eigen::VectorXd pb = category_probabilities(b, fitted_thetas.row(i).dot(b.loadings), link);
      item_total += (pa - pb).squaredNorm() / static_cast<double>(pa.size());
    }
    total += item_total;
    cells += static_cast<double>(true_thetas.rows());
  }
  // A binary item has two categories with equal absolute differences, so
  // the per-category mean equals the squared difference of P(Y = 1).
  return cells > 0 ? total / cells : 0.0;
}

double RecoveryReport::mean_theta_correlation() const {
  return theta_correlation.size() > 0 ? theta_correlation.mean() : 0.0;
}

RecoveryReport recovery_report(const PersonFactors& true_thetas, const std::vector<ItemParams>& true_items,
                               const PersonFactors& fitted_thetas, const std::vector<ItemParams>& fitted_items,
                               Link link) {
  check_pair(true_thetas, true_items, fitted_thetas, fitted_items);
  RecoveryReport report;
  report.prob_mse = prob_mse(true_thetas, true_items, fitted_thetas, fitted_items, link);
  const Eigen::MatrixXd a_true = loading_matrix(true_items);
  const Eigen::MatrixXd a_fit = loading_matrix(fitted_items);
  report.q_loading_loss = (a_true - a_fit).squaredNorm() / static_cast<double>(a_true.size());

  const int k = static_cast<int>(a_true.cols());
  report.theta_correlation = Eigen::VectorXd::Zero(k);
  try {
    const AlignmentResult aligned = align_loadings(a_fit, a_true);
    report.aligned_loading_loss = aligned.loss;
    // a*_j ~ H a_j, so a_j' theta = a*_j' H^{-T} theta.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aligned.transform.transpose());
    if (qr.rank() == k) {
      const Eigen::MatrixXd mapped = qr.solve(fitted_thetas.transpose()).transpose();
      for (int f = 0; f < k; ++f) report.theta_correlation[f] = column_correlation(true_thetas.col(f), mapped.col(f));
    }
  } catch (const std::invalid_argument&) {
    // Rank-deficient fitted loadings: no rotation exists, report the unaligned loss.
    report.aligned_loading_loss = report.q_loading_loss;
  }
  return report;
}

}  // namespace ifa
