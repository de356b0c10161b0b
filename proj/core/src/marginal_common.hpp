#pragma once

// Helpers shared by the marginal-likelihood engines.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ifa/identify.hpp"
#include "ifa/irf.hpp"
#include "ifa/item_fit.hpp"
#include "ifa/spectral.hpp"
#include "ifa/types.hpp"

namespace ifa::detail {

inline void check_marginal_inputs(const Dataset& data, const ModelSpec& model, const QMatrix* q,
                                  const char* who) {
  data.require_coverage();
  if (model.k < 1) throw std::invalid_argument(std::string(who) + ": K must be at least 1");
  require_supported(model.kind, model.link);
  if (model.kind == ModelKind::binary && !data.is_binary()) {
    throw std::invalid_argument(std::string(who) +
                                ": binary model requested for data with more than two categories");
  }
  if (q != nullptr && (q->n_items() != data.n_items() || q->k() != model.k)) {
    throw std::invalid_argument(std::string(who) + ": Q-matrix shape does not match J x K");
  }
}

inline std::vector<ItemParams> starting_items(const Dataset& data, const ModelSpec& model, const QMatrix* q,
                                              const std::vector<ItemParams>* start, const char* who) {
  std::vector<ItemParams> items = start != nullptr ? *start : spectral_start(data, model, q).items;
  if (static_cast<int>(items.size()) != data.n_items()) {
    throw std::invalid_argument(std::string(who) + ": starting items do not match the data");
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    const ItemParams& item = items[j];
    if (item.kind != model.kind || item.factors() != model.k ||
        item.categories() != data.categories(static_cast<int>(j))) {
      throw std::invalid_argument(std::string(who) + ": starting item " + std::to_string(j) +
                                  " has the wrong kind or shape");
    }
    validate_item(item);
  }
  if (q != nullptr) items = apply_q_mask(std::move(items), *q);
  return items;
}

/// M-step options: full convergence of the weighted item fit.
inline ItemFitOptions m_step_options(const QMatrix* q, int item, int k) {
  ItemFitOptions options;
  options.max_steps = 50;
  options.grad_tol = 1e-8;
  options.free_loadings = free_loading_flags(q, item, k);
  return options;
}

inline void require_finite(const std::vector<ItemParams>& items, const char* who) {
  for (const auto& item : items) {
    if (!item.intercepts.allFinite() || !item.loadings.allFinite()) {
      throw std::runtime_error(std::string(who) + ": item parameters diverged");
    }
  }
}

}  // namespace ifa::detail
